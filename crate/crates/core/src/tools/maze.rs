use serde_json::{Map, Value};

use super::{param, ParamType, ToolDescriptor, ToolOutput, ToolRegistry};
use crate::maze::MazeState;

const NEXT_CELLS_DOC: &str = include_str!("../../prompts/tools/get_possible_next_cells.txt");
const CONNECTED_PATH_DOC: &str = include_str!("../../prompts/tools/get_connected_path.txt");

/// The two maze exploration tools. The registry owns the episode's maze.
pub fn maze_registry(state: MazeState) -> ToolRegistry<MazeState> {
    let mut registry = ToolRegistry::new(state);
    registry.register(
        ToolDescriptor {
            name: "get_possible_next_cells".into(),
            description: NEXT_CELLS_DOC.trim_end().into(),
            params: vec![param("node_id", ParamType::Scalar, "Key of the cell to explore.")],
            deterministic: true,
        },
        get_possible_next_cells,
    );
    registry.register(
        ToolDescriptor {
            name: "get_connected_path".into(),
            description: CONNECTED_PATH_DOC.trim_end().into(),
            params: vec![],
            deterministic: true,
        },
        get_connected_path,
    );
    registry
}

fn get_possible_next_cells(state: &mut MazeState, args: &Map<String, Value>) -> Result<ToolOutput, String> {
    let key = match &args["node_id"] {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    let next = state.get_possible_next_cells(&key).map_err(|e| e.to_string())?;
    let cells = next.iter().map(|k| state.cell_json(k.parse().expect("keys are indices"))).collect();
    Ok(ToolOutput::Json(Value::Array(cells)))
}

fn get_connected_path(state: &mut MazeState, _: &Map<String, Value>) -> Result<ToolOutput, String> {
    let path = state.get_connected_path().map_err(|e| e.to_string())?;
    Ok(ToolOutput::Json(Value::Array(path.into_iter().map(Value::String).collect())))
}

#[cfg(test)]
mod tests {
    use serde_json::json;

    use super::super::{ToolCall, Toolbox};
    use super::*;
    use crate::maze::{generate_maze, MazeConfig};

    fn call(name: &str, arguments: Value) -> ToolCall {
        ToolCall { call_id: "m".into(), name: name.into(), arguments }
    }

    #[test]
    fn two_tools() {
        let maze = generate_maze(&MazeConfig::default()).unwrap();
        let mut reg = maze_registry(maze);
        assert_eq!(reg.len(), 2);
        let early = reg.dispatch(&call("get_connected_path", json!({})));
        assert!(early.is_error);

        let start = reg.context().start_key().to_owned();
        let first = reg.dispatch(&call("get_possible_next_cells", json!({"node_id": start})));
        let second = reg.dispatch(&call("get_possible_next_cells", json!({"node_id": start.parse::<u64>().unwrap()})));
        assert!(!first.is_error);
        assert_eq!(first, second);
        let cells: Value = serde_json::from_str(&first.content).unwrap();
        assert!(cells.as_array().unwrap().iter().all(|c| c["euclidean_distance"].as_f64().unwrap() >= 0.0));

        let path = reg.dispatch(&call("get_connected_path", Value::Null));
        assert_eq!(serde_json::from_str::<Value>(&path.content).unwrap(), json!([start]));
    }
}
