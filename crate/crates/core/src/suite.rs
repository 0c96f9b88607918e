//! End-to-end runs: seeded graph or maze generation, one episode per task,
//! executed on a bounded worker pool.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{
    build_maze_prompt_no_tools, build_maze_prompt_with_tools, build_prompt_no_tools, build_prompt_with_tools,
    maze_user_message, run_episode, AgentBackend, EpisodeHeader, RunConfig, Setting, Task, Transcript,
};
use crate::benchmark::{gold_answer, instantiate_all, BenchmarkError, GoldAnswer, QueryInstance, TemplateConfig};
use crate::generator::{generate_graph, GeneratorConfig, GeneratorError, Preset};
use crate::maze::{generate_maze, MazeConfig, MazeError, MazeState};
use crate::seed::{derive_seed, stage_rng};
use crate::tools::{kg_registry, maze_registry, Toolbox};
use crate::PropertyGraph;

/// Graphs drawn per run before giving up on instantiating every template.
pub const MAX_REGENERATIONS: usize = 20;

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Maze(#[from] MazeError),
    #[error("run {run}: {source} (after {attempts} graph(s))")]
    NotInstantiable { run: usize, attempts: usize, source: BenchmarkError },
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    /// Generator settings; `graph.seed` is the root seed of the whole suite.
    pub graph: GeneratorConfig,
    pub runs: usize,
    pub templates: TemplateConfig,
    pub episode: RunConfig,
    pub max_regenerations: usize,
    /// Worker threads; 0 uses one per core.
    pub threads: usize,
    pub model: String,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            graph: Preset::Paper100.config(0),
            runs: 10,
            templates: TemplateConfig::default(),
            episode: RunConfig::default(),
            max_regenerations: MAX_REGENERATIONS,
            threads: 0,
            model: "scripted".into(),
        }
    }
}

/// One run's graph with an instance and gold answer per template.
#[derive(Debug, Clone)]
pub struct BenchRun {
    pub run: usize,
    pub graph_seed: u64,
    /// Graphs discarded because some template had no instance.
    pub regenerations: usize,
    pub graph: PropertyGraph,
    pub tasks: Vec<(QueryInstance, GoldAnswer)>,
}

/// Generates the graph for `run`, redrawing it until all templates instantiate.
pub fn prepare_run(config: &BenchConfig, run: usize) -> Result<BenchRun, SuiteError> {
    let mut last = None;
    for attempt in 0..config.max_regenerations.max(1) {
        let graph_seed = derive_seed(config.graph.seed, &format!("run-{run}/graph-{attempt}"));
        let graph = generate_graph(&GeneratorConfig { seed: graph_seed, ..config.graph.clone() })?.graph;
        match instantiate_all(&graph, &mut stage_rng(graph_seed, "questions"), &config.templates) {
            Ok(instances) => {
                let tasks = instances
                    .into_iter()
                    .map(|i| {
                        let gold = gold_answer(&i.query, &graph);
                        (i, gold)
                    })
                    .collect();
                return Ok(BenchRun { run, graph_seed, regenerations: attempt, graph, tasks });
            }
            Err(e) => last = Some(e),
        }
    }
    Err(SuiteError::NotInstantiable {
        run,
        attempts: config.max_regenerations.max(1),
        source: last.expect("at least one attempt"),
    })
}

fn pool(threads: usize) -> Result<rayon::ThreadPool, SuiteError> {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| SuiteError::Pool(e.to_string()))
}

/// Runs every (run, template) episode. Transcripts come back in run order,
/// then template order.
pub fn run_bench(
    config: &BenchConfig,
    backend: &(dyn Fn(&QueryInstance) -> Box<dyn AgentBackend> + Sync),
) -> Result<Vec<Transcript>, SuiteError> {
    let pool = pool(config.threads)?;
    pool.install(|| {
        let runs: Vec<BenchRun> =
            (0..config.runs).into_par_iter().map(|r| prepare_run(config, r)).collect::<Result<_, _>>()?;
        let jobs: Vec<(&BenchRun, &QueryInstance, &GoldAnswer)> =
            runs.iter().flat_map(|r| r.tasks.iter().map(move |(i, g)| (r, i, g))).collect();
        Ok(jobs
            .into_par_iter()
            .map(|(run, instance, gold)| bench_episode(config, run, instance, gold, backend))
            .collect())
    })
}

pub fn bench_episode(
    config: &BenchConfig,
    run: &BenchRun,
    instance: &QueryInstance,
    gold: &GoldAnswer,
    backend: &(dyn Fn(&QueryInstance) -> Box<dyn AgentBackend> + Sync),
) -> Transcript {
    let setting = if config.episode.with_tools { Setting::WithTools } else { Setting::NoTools };
    let header = EpisodeHeader::new(
        format!("run{:02}-{}", run.run, instance.template()),
        config.model.clone(),
        setting,
        Task::Query { instance: instance.clone(), gold: gold.clone() },
    );
    let time = &config.episode.system_time;
    let mut agent = backend(instance);
    if config.episode.with_tools {
        let prompt = build_prompt_with_tools(&run.graph.schema().render().to_text(), time);
        let mut tools = kg_registry(&run.graph);
        run_episode(
            agent.as_mut(),
            Some(&mut tools as &mut dyn Toolbox),
            header,
            &prompt,
            &instance.question_text,
            &config.episode,
        )
    } else {
        let prompt = build_prompt_no_tools(&run.graph.to_lines(), time);
        run_episode(agent.as_mut(), None, header, &prompt, &instance.question_text, &config.episode)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MazeSuiteConfig {
    /// Maze settings; `maze.seed` is the root seed of the suite.
    pub maze: MazeConfig,
    pub mazes: usize,
    /// Episodes per maze.
    pub runs_per_maze: usize,
    pub episode: RunConfig,
    pub threads: usize,
    pub model: String,
}

impl Default for MazeSuiteConfig {
    fn default() -> Self {
        Self {
            maze: MazeConfig::default(),
            mazes: 10,
            runs_per_maze: 1,
            episode: RunConfig::default(),
            threads: 0,
            model: "scripted".into(),
        }
    }
}

pub fn prepare_mazes(config: &MazeSuiteConfig) -> Result<Vec<MazeState>, SuiteError> {
    (0..config.mazes)
        .map(|i| {
            let seed = derive_seed(config.maze.seed, &format!("maze-{i}"));
            Ok(generate_maze(&MazeConfig { seed, ..config.maze.clone() })?)
        })
        .collect()
}

pub fn run_maze_suite(
    config: &MazeSuiteConfig,
    backend: &(dyn Fn(&MazeState) -> Box<dyn AgentBackend> + Sync),
) -> Result<Vec<Transcript>, SuiteError> {
    let mazes = prepare_mazes(config)?;
    let jobs: Vec<(usize, usize)> =
        (0..mazes.len()).flat_map(|m| (0..config.runs_per_maze).map(move |r| (m, r))).collect();
    Ok(pool(config.threads)?.install(|| {
        jobs.into_par_iter()
            .map(|(m, r)| maze_episode(config, &mazes[m], &format!("maze{m:02}-run{r:02}"), backend))
            .collect()
    }))
}

pub fn maze_episode(
    config: &MazeSuiteConfig,
    maze: &MazeState,
    episode_id: &str,
    backend: &(dyn Fn(&MazeState) -> Box<dyn AgentBackend> + Sync),
) -> Transcript {
    let setting = if config.episode.with_tools { Setting::WithTools } else { Setting::NoTools };
    let header =
        EpisodeHeader::new(episode_id, config.model.clone(), setting, Task::Maze { maze: Box::new(maze.clone()) });
    let mut agent = backend(maze);
    let user = maze_user_message(maze);
    if config.episode.with_tools {
        let mut tools = maze_registry(maze.clone());
        let prompt = build_maze_prompt_with_tools(maze);
        run_episode(agent.as_mut(), Some(&mut tools as &mut dyn Toolbox), header, &prompt, &user, &config.episode)
    } else {
        run_episode(agent.as_mut(), None, header, &build_maze_prompt_no_tools(maze), &user, &config.episode)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::{EpisodeStatus, MazeSolver, ScriptedSolver};
    use crate::evaluation::{aggregate, score_transcript, Layout};

    #[test]
    fn scripted_bench_is_perfect_and_deterministic() {
        let config = BenchConfig { runs: 2, ..BenchConfig::default() };
        let factory = |i: &QueryInstance| Box::new(ScriptedSolver::new(i.query.clone())) as Box<dyn AgentBackend>;
        let transcripts = run_bench(&config, &factory).unwrap();
        assert_eq!(transcripts.len(), 24);
        let scores: Vec<_> = transcripts.iter().map(|t| score_transcript(t, None).unwrap()).collect();
        let report = aggregate(&scores, Layout::Table1).unwrap();
        assert_eq!(report.rows[0].correct, 24);
        let again = run_bench(&config, &factory).unwrap();
        let answers = |ts: &[Transcript]| ts.iter().map(|t| t.final_answer().map(str::to_owned)).collect::<Vec<_>>();
        assert_eq!(answers(&transcripts), answers(&again));
    }

    #[test]
    fn scripted_maze_suite_is_perfect() {
        let config = MazeSuiteConfig { mazes: 3, ..MazeSuiteConfig::default() };
        let factory = |m: &MazeState| Box::new(MazeSolver::new(m.start_key(), m.goal_key())) as Box<dyn AgentBackend>;
        let transcripts = run_maze_suite(&config, &factory).unwrap();
        assert!(transcripts.iter().all(|t| t.status() == EpisodeStatus::Completed));
        let scores: Vec<_> = transcripts.iter().map(|t| score_transcript(t, None).unwrap()).collect();
        assert!(scores.iter().all(|s| s.score.correct));
    }
}
