use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use graphwalk::agent::{AgentBackend, LlmBackend, LlmConfig, MazeSolver, ScriptedSolver, Transcript};
use graphwalk::benchmark::{brute_force_gold, gold_answer, instantiate, QueryInstance, QueryTemplate};
use graphwalk::evaluation::{aggregate, score_transcript, AnswerExtractor, EpisodeScore, Layout, LlmExtractor, Report};
use graphwalk::generator::{generate_graph, GeneratorConfig, Preset};
use graphwalk::maze::{generate_maze, MazeState, Overlay};
use graphwalk::seed::stage_rng;
use graphwalk::suite::{run_bench, run_maze_suite, BenchConfig, MazeSuiteConfig};
use serde::Deserialize;

#[derive(Parser)]
#[command(name = "graphwalk", version, about = "Graph traversal benchmarks for tool-using agents")]
struct Cli {
    /// TOML file with [bench], [maze] and [llm] tables; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph and write its dump, schema table and line serialization.
    GenerateGraph {
        #[arg(long, value_enum, default_value = "paper-100")]
        preset: PresetArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Override the preset's node count.
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long, default_value = "graph.json")]
        out: PathBuf,
    },
    /// Compare the native oracle with brute-force enumeration on small graphs.
    OracleCheck {
        #[arg(long, default_value_t = 30)]
        nodes: usize,
        #[arg(long, default_value_t = 100)]
        graphs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Instances drawn per template and graph.
        #[arg(long, default_value_t = 3)]
        per_template: usize,
    },
    /// Run the twelve-template benchmark.
    RunBench {
        #[arg(long, value_enum)]
        backend: Option<BackendArg>,
        #[arg(long, value_enum)]
        preset: Option<PresetArg>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Give the agent the whole graph instead of tools.
        #[arg(long)]
        no_tools: bool,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        model: Option<String>,
        #[arg(long, default_value = "out/bench")]
        out_dir: PathBuf,
    },
    /// Generate a maze and print it.
    GenerateMaze {
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        wall_ratio: Option<f64>,
        #[arg(long)]
        min_path: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "plain")]
        render: RenderArg,
        /// Also write the maze state as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run maze episodes and report path validity.
    RunMaze {
        #[arg(long, value_enum)]
        backend: Option<BackendArg>,
        #[arg(long)]
        mazes: Option<usize>,
        #[arg(long)]
        runs_per_maze: Option<usize>,
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        wall_ratio: Option<f64>,
        #[arg(long)]
        min_path: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        no_tools: bool,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        model: Option<String>,
        #[arg(long, default_value = "out/maze")]
        out_dir: PathBuf,
    },
    /// Score transcripts and write reports.
    Report {
        /// A JSON-lines transcript file or a directory of them.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "table1")]
        layout: LayoutArg,
        /// Ask the configured chat endpoint to extract answers JSON parsing misses.
        #[arg(long)]
        llm_extractor: bool,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    #[value(name = "paper-100")]
    Paper100,
    #[value(name = "paper-150")]
    Paper150,
    #[value(name = "paper-200")]
    Paper200,
    #[value(name = "paper-500")]
    Paper500,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Paper100 => Preset::Paper100,
            PresetArg::Paper150 => Preset::Paper150,
            PresetArg::Paper200 => Preset::Paper200,
            PresetArg::Paper500 => Preset::Paper500,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum BackendArg {
    Scripted,
    Llm,
}

#[derive(Clone, Copy, ValueEnum)]
enum RenderArg {
    Plain,
    Exploration,
}

#[derive(Clone, Copy, ValueEnum)]
enum LayoutArg {
    Table1,
    Table2,
    Maze,
}

impl From<LayoutArg> for Layout {
    fn from(l: LayoutArg) -> Self {
        match l {
            LayoutArg::Table1 => Layout::Table1,
            LayoutArg::Table2 => Layout::Table2,
            LayoutArg::Maze => Layout::Maze,
        }
    }
}

#[derive(Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    backend: Option<BackendArg>,
    bench: Option<BenchConfig>,
    maze: Option<MazeSuiteConfig>,
    llm: Option<LlmConfig>,
}

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Environment first, then the file's [llm] table on top.
    fn llm(&self) -> LlmConfig {
        let env = LlmConfig::from_env();
        match &self.llm {
            Some(file) => LlmConfig { api_key: file.api_key.clone().or(env.api_key), ..file.clone() },
            None => env,
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let file = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::GenerateGraph { preset, seed, nodes, out } => {
            let mut config = Preset::from(preset).config(seed);
            if let Some(n) = nodes {
                config.num_nodes = n;
            }
            generate_graph_files(&config, &out)?;
        }
        Command::OracleCheck { nodes, graphs, seed, per_template } => {
            return oracle_check(nodes, graphs, seed, per_template);
        }
        Command::RunBench { backend, preset, runs, seed, no_tools, threads, model, out_dir } => {
            let mut config = file.bench.clone().unwrap_or_default();
            if let Some(p) = preset {
                config.graph = Preset::from(p).config(seed.unwrap_or(config.graph.seed));
            }
            if let Some(s) = seed {
                config.graph.seed = s;
            }
            if let Some(r) = runs {
                config.runs = r;
            }
            if let Some(t) = threads {
                config.threads = t;
            }
            if no_tools {
                config.episode.with_tools = false;
            }
            let backend = backend.or(file.backend).unwrap_or(BackendArg::Scripted);
            let llm = file.llm();
            config.model = model.unwrap_or_else(|| default_model(backend, &llm, &config.model));
            bench(&config, backend, llm, &out_dir)?;
        }
        Command::GenerateMaze { size, wall_ratio, min_path, seed, render, out } => {
            let mut config = file.maze.clone().unwrap_or_default().maze;
            override_maze(&mut config, size, wall_ratio, min_path, seed);
            let maze = generate_maze(&config)?;
            let overlay = match render {
                RenderArg::Plain => Overlay::Plain,
                RenderArg::Exploration => Overlay::Exploration,
            };
            print!("{}", maze.render_ascii(overlay));
            println!("start {} goal {}, {} walls", maze.start_key(), maze.goal_key(), maze.meta.actual_walls);
            if let Some(out) = out {
                write(&out, &serde_json::to_string_pretty(&maze)?)?;
            }
        }
        Command::RunMaze {
            backend,
            mazes,
            runs_per_maze,
            size,
            wall_ratio,
            min_path,
            seed,
            no_tools,
            threads,
            model,
            out_dir,
        } => {
            let mut config = file.maze.clone().unwrap_or_default();
            override_maze(&mut config.maze, size, wall_ratio, min_path, seed);
            if let Some(m) = mazes {
                config.mazes = m;
            }
            if let Some(r) = runs_per_maze {
                config.runs_per_maze = r;
            }
            if let Some(t) = threads {
                config.threads = t;
            }
            if no_tools {
                config.episode.with_tools = false;
            }
            let backend = backend.or(file.backend).unwrap_or(BackendArg::Scripted);
            let llm = file.llm();
            config.model = model.unwrap_or_else(|| default_model(backend, &llm, &config.model));
            maze_run(&config, backend, llm, &out_dir)?;
        }
        Command::Report { input, layout, llm_extractor, out_dir } => {
            let extractor = llm_extractor.then(|| LlmExtractor::new(file.llm()));
            let transcripts = read_transcripts(&input)?;
            let report = score_all(&transcripts, layout.into(), extractor.as_ref().map(|e| e as &dyn AnswerExtractor))?;
            match out_dir {
                Some(dir) => write_report(&report, &dir)?,
                None => print!("{}", report.to_csv()),
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn default_model(backend: BackendArg, llm: &LlmConfig, configured: &str) -> String {
    match backend {
        BackendArg::Scripted => configured.to_owned(),
        BackendArg::Llm => llm.model.clone(),
    }
}

fn override_maze(
    config: &mut graphwalk::maze::MazeConfig,
    size: Option<usize>,
    wall_ratio: Option<f64>,
    min_path: Option<usize>,
    seed: Option<u64>,
) {
    if let Some(s) = size {
        config.width = s;
        config.height = s;
    }
    if let Some(r) = wall_ratio {
        config.wall_ratio = r;
    }
    if let Some(m) = min_path {
        config.min_path_len = m;
    }
    if let Some(s) = seed {
        config.seed = s;
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn generate_graph_files(config: &GeneratorConfig, out: &Path) -> Result<()> {
    let g = generate_graph(config)?.graph;
    write(out, &serde_json::to_string_pretty(&g.to_dump())?)?;
    let schema_path = out.with_extension("schema.txt");
    write(&schema_path, &g.schema().render().to_text())?;
    let lines_path = out.with_extension("lines.txt");
    write(&lines_path, &g.to_lines())?;
    println!(
        "{} nodes, {} relationships, {} node classes, {} relationship classes",
        g.nodes().len(),
        g.relationships().len(),
        g.schema().node_classes.len(),
        g.schema().rel_classes.len()
    );
    println!("wrote {}, {}, {}", out.display(), schema_path.display(), lines_path.display());
    Ok(())
}

fn oracle_check(nodes: usize, graphs: usize, seed: u64, per_template: usize) -> Result<ExitCode> {
    let mut compared = 0;
    let mut mismatches = Vec::new();
    for i in 0..graphs as u64 {
        let graph_seed = seed.wrapping_add(i);
        let config = GeneratorConfig { num_nodes: nodes, ..Preset::Paper100.config(graph_seed) };
        let g = generate_graph(&config)?.graph;
        let mut rng = stage_rng(graph_seed, "questions");
        for template in QueryTemplate::ALL {
            for _ in 0..per_template {
                let Ok(instance) = instantiate(template, &g, &mut rng, &Default::default()) else { break };
                compared += 1;
                if gold_answer(&instance.query, &g) != brute_force_gold(&instance.query, &g)? {
                    mismatches.push(format!("seed {graph_seed}: {:?}", instance.query));
                }
            }
        }
    }
    println!("{compared} instances on {graphs} graphs of {nodes} nodes, {} mismatches", mismatches.len());
    for m in &mismatches {
        println!("mismatch {m}");
    }
    Ok(if mismatches.is_empty() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn bench(config: &BenchConfig, backend: BackendArg, llm: LlmConfig, out_dir: &Path) -> Result<()> {
    if backend == BackendArg::Scripted && !config.episode.with_tools {
        bail!("the scripted backend needs tools; use --backend llm with --no-tools");
    }
    let factory = move |i: &QueryInstance| -> Box<dyn AgentBackend> {
        match backend {
            BackendArg::Scripted => Box::new(ScriptedSolver::new(i.query.clone())),
            BackendArg::Llm => Box::new(LlmBackend::new(llm.clone())),
        }
    };
    let transcripts = run_bench(config, &factory)?;
    finish_run(&transcripts, Layout::Table1, out_dir)
}

fn maze_run(config: &MazeSuiteConfig, backend: BackendArg, llm: LlmConfig, out_dir: &Path) -> Result<()> {
    if backend == BackendArg::Scripted && !config.episode.with_tools {
        bail!("the scripted backend needs tools; use --backend llm with --no-tools");
    }
    let factory = move |m: &MazeState| -> Box<dyn AgentBackend> {
        match backend {
            BackendArg::Scripted => Box::new(MazeSolver::new(m.start_key(), m.goal_key())),
            BackendArg::Llm => Box::new(LlmBackend::new(llm.clone())),
        }
    };
    let transcripts = run_maze_suite(config, &factory)?;
    finish_run(&transcripts, Layout::Maze, out_dir)
}

fn finish_run(transcripts: &[Transcript], layout: Layout, out_dir: &Path) -> Result<()> {
    let jsonl: String = transcripts.iter().map(Transcript::to_jsonl).collect();
    write(&out_dir.join("transcripts.jsonl"), &jsonl)?;
    let report = score_all(transcripts, layout, None)?;
    write_report(&report, out_dir)
}

fn score_all(transcripts: &[Transcript], layout: Layout, extractor: Option<&dyn AnswerExtractor>) -> Result<Report> {
    let scores: Vec<EpisodeScore> =
        transcripts.iter().map(|t| score_transcript(t, extractor)).collect::<Result<_, _>>()?;
    Ok(aggregate(&scores, layout)?)
}

fn write_report(report: &Report, dir: &Path) -> Result<()> {
    write(&dir.join("report.json"), &report.to_json())?;
    let summary = match report.layout {
        Layout::Maze => report.maze_csv(),
        _ => report.summary_csv(),
    };
    write(&dir.join("summary.csv"), &summary)?;
    write(&dir.join("categories.csv"), &report.category_csv())?;
    print!("{}", report.to_csv());
    println!("wrote reports to {}", dir.display());
    Ok(())
}

fn read_transcripts(input: &Path) -> Result<Vec<Transcript>> {
    let files: Vec<PathBuf> = if input.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(input)
            .with_context(|| format!("listing {}", input.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        files.sort();
        files
    } else {
        vec![input.to_owned()]
    };
    let mut out = Vec::new();
    for f in &files {
        let text = fs::read_to_string(f).with_context(|| format!("reading {}", f.display()))?;
        out.extend(Transcript::parse_jsonl(&text).with_context(|| format!("parsing {}", f.display()))?);
    }
    if out.is_empty() {
        bail!("no transcripts found in {}", input.display());
    }
    Ok(out)
}
