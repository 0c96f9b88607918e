use crate::maze::{MazeState, Overlay};

const KG_WITH_TOOLS: &str = include_str!("../../prompts/kg_with_tools.txt");
const KG_NO_TOOLS: &str = include_str!("../../prompts/kg_no_tools.txt");
const MAZE_WITH_TOOLS: &str = include_str!("../../prompts/maze_with_tools.txt");
const MAZE_NO_TOOLS: &str = include_str!("../../prompts/maze_no_tools.txt");

/// Guideline line about exploration history in the maze tool prompt.
pub const MAZE_TOOL_HISTORY_NOTE: &str = "- Every cell you pass to get_possible_next_cells is marked with the next \
mark_order value; get_connected_path uses only marked cells, from the first marked cell to the last one.";

const WALL_LEGEND_LINE: &str = "- '#' represents a wall cell that cannot be entered";
const WALL_GUIDELINE: &str = "You may move only up, down, left or right between adjacent open cells; wall cells \
('#') cannot be part of the path.";

fn fill(template: &str, slots: &[(&str, &str)]) -> String {
    let mut out = template.to_owned();
    for (name, value) in slots {
        out = out.replace(&format!("{{{name}}}"), value);
    }
    out
}

pub fn build_prompt_with_tools(schema_text: &str, system_time: &str) -> String {
    fill(KG_WITH_TOOLS, &[("graph_schema", schema_text), ("system_time", system_time)])
}

pub fn build_prompt_no_tools(graph_text: &str, system_time: &str) -> String {
    fill(KG_NO_TOOLS, &[("graph_data", graph_text), ("system_time", system_time)])
}

/// Answer format requested in both maze prompts.
pub fn maze_output_schema() -> &'static str {
    r#"{"path": ["string"]}"#
}

fn maze_size(maze: &MazeState) -> String {
    format!("{}x{}", maze.width, maze.height)
}

pub fn build_maze_prompt_with_tools(maze: &MazeState) -> String {
    let schema = MazeState::schema().render().to_text();
    fill(
        MAZE_WITH_TOOLS,
        &[
            ("start_node_key", maze.start_key()),
            ("end_node_key", maze.goal_key()),
            ("maze_size", &maze_size(maze)),
            ("graph_schema", &schema),
            ("tool_history_note", MAZE_TOOL_HISTORY_NOTE),
            ("output_schema", maze_output_schema()),
        ],
    )
}

/// User turn that accompanies either maze prompt.
pub fn maze_user_message(maze: &MazeState) -> String {
    format!("Find the path from cell {} to cell {}.", maze.start_key(), maze.goal_key())
}

pub fn build_maze_prompt_no_tools(maze: &MazeState) -> String {
    fill(
        MAZE_NO_TOOLS,
        &[
            ("start_node_key", maze.start_key()),
            ("end_node_key", maze.goal_key()),
            ("wall_legend_line", WALL_LEGEND_LINE),
            ("maze_size", &maze_size(maze)),
            ("maze_data", &maze.render_ascii(Overlay::Plain)),
            ("wall_guideline", WALL_GUIDELINE),
            ("output_schema", maze_output_schema()),
        ],
    )
}
