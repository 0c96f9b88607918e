use serde_json::{json, Map, Value};

use super::{param, str_arg, ParamType, ToolDescriptor, ToolOutput, ToolRegistry};
use crate::graph::{EntityKind, EntityType, GraphError, Node, PropertyGraph, PropertyValue, ValueKind};

/// The four knowledge-graph tools, bound to one immutable graph.
pub type KgContext<'g> = &'g PropertyGraph;

const NODE_BY_PROPERTY_DOC: &str = include_str!("../../prompts/tools/get_node_by_property.txt");
const NEAREST_NEIGHBORS_DOC: &str = include_str!("../../prompts/tools/get_all_nearest_neighbors.txt");
const UNIQUE_VALUES_DOC: &str = include_str!("../../prompts/tools/get_unique_property_values.txt");
const THINK_DOC: &str = include_str!("../../prompts/tools/think.txt");

pub fn kg_registry(graph: &PropertyGraph) -> ToolRegistry<KgContext<'_>> {
    let mut registry = ToolRegistry::new(graph);
    let lookup_params = |what: &str| {
        vec![
            param("label", ParamType::String, &format!("Label of the {what} node.")),
            param("property_name", ParamType::String, &format!("Property identifying the {what} node.")),
            param("property_value", ParamType::Scalar, "Exact value to match."),
        ]
    };
    registry.register(
        ToolDescriptor {
            name: "get_node_by_property".into(),
            description: NODE_BY_PROPERTY_DOC.trim_end().into(),
            params: lookup_params("target"),
            deterministic: true,
        },
        get_node_by_property,
    );
    registry.register(
        ToolDescriptor {
            name: "get_all_nearest_neighbors".into(),
            description: NEAREST_NEIGHBORS_DOC.trim_end().into(),
            params: lookup_params("central"),
            deterministic: true,
        },
        get_all_nearest_neighbors,
    );
    registry.register(
        ToolDescriptor {
            name: "get_unique_property_values".into(),
            description: UNIQUE_VALUES_DOC.trim_end().into(),
            params: vec![
                param("property_name", ParamType::String, "Property to list values for."),
                param("entity_name", ParamType::String, "Node label or relationship type."),
                param("entity_type", ParamType::String, "Either 'node' or 'relationship'."),
            ],
            deterministic: true,
        },
        get_unique_property_values,
    );
    registry.register(
        ToolDescriptor {
            name: "think".into(),
            description: THINK_DOC.trim_end().into(),
            params: vec![param("thought", ParamType::String, "Reasoning to record.")],
            deterministic: false,
        },
        think,
    );
    registry
}

fn node_json(node: &Node) -> Value {
    Value::Object(node.properties.iter().map(|(k, v)| (k.clone(), v.to_json())).collect())
}

fn check_node_property(graph: &PropertyGraph, label: &str, property: &str) -> Result<(), String> {
    let Some(class) = graph.schema().node_class(label) else {
        return Err(GraphError::UnknownLabel { label: label.into(), valid: graph.labels() }.to_string());
    };
    if !class.properties.iter().any(|p| p == property) {
        return Err(format!(
            "unknown property {property:?} for label {label:?}; valid properties: {}",
            class.properties.join(", ")
        ));
    }
    Ok(())
}

/// Converts a tool argument to a property value, turning numeric strings
/// into numbers for numeric properties and numbers into text for text ones.
fn coerce_value(graph: &PropertyGraph, entity: &str, property: &str, value: &Value) -> Result<PropertyValue, String> {
    let kind = graph.property_kind(entity, property);
    match value {
        Value::Number(n) => match (kind, n.as_f64()) {
            (Some(ValueKind::Text), _) => Ok(PropertyValue::Text(n.to_string())),
            (_, Some(x)) => PropertyValue::number(x).map_err(|e| e.to_string()),
            (_, None) => Err(format!("unsupported number {n}")),
        },
        Value::String(s) => {
            if kind == Some(ValueKind::Number) {
                if let Ok(x) = s.trim().parse::<f64>() {
                    return PropertyValue::number(x).map_err(|e| e.to_string());
                }
            }
            Ok(PropertyValue::Text(s.clone()))
        }
        other => Err(format!("property_value must be a string or a number, got {other}")),
    }
}

fn matching_nodes<'g>(graph: &'g PropertyGraph, args: &Map<String, Value>) -> Result<Vec<&'g Node>, String> {
    let label = str_arg(args, "label");
    let property = str_arg(args, "property_name");
    check_node_property(graph, label, property)?;
    let value = coerce_value(graph, label, property, &args["property_value"])?;
    Ok(graph.nodes_by_property(label, property, &value))
}

fn get_node_by_property(graph: &mut KgContext<'_>, args: &Map<String, Value>) -> Result<ToolOutput, String> {
    let nodes = matching_nodes(graph, args)?;
    Ok(ToolOutput::Json(Value::Array(nodes.into_iter().map(node_json).collect())))
}

fn get_all_nearest_neighbors(graph: &mut KgContext<'_>, args: &Map<String, Value>) -> Result<ToolOutput, String> {
    let graph: &PropertyGraph = graph;
    let mut out = Vec::new();
    for center in matching_nodes(graph, args)? {
        for n in graph.neighbors(center.id).map_err(|e| e.to_string())? {
            out.push(json!({
                "center": center.key(),
                "direction": n.direction,
                "relationship": {
                    "type": n.relationship.rel_type,
                    "properties": Value::Object(
                        n.relationship.properties.iter().map(|(k, v)| (k.clone(), v.to_json())).collect()
                    ),
                },
                "node": {"label": n.node.label, "properties": node_json(n.node)},
            }));
        }
    }
    Ok(ToolOutput::Json(Value::Array(out)))
}

fn get_unique_property_values(graph: &mut KgContext<'_>, args: &Map<String, Value>) -> Result<ToolOutput, String> {
    let property = str_arg(args, "property_name");
    let entity = str_arg(args, "entity_name");
    let entity_type = str_arg(args, "entity_type");
    let EntityKind(kind) = entity_type.parse().map_err(|e: GraphError| e.to_string())?;
    let schema = graph.schema();
    let declared: Option<Vec<&String>> = match kind {
        EntityType::Node => schema.node_class(entity).map(|c| c.properties.iter().collect()),
        EntityType::Relationship => {
            let props: Vec<&String> =
                schema.rel_classes.iter().filter(|r| r.name == entity).flat_map(|r| &r.properties).collect();
            schema.rel_class(entity).map(|_| props)
        }
    };
    if let Some(declared) = declared {
        if !declared.iter().any(|p| *p == property) {
            let valid: Vec<&str> = declared.iter().map(|s| s.as_str()).collect();
            return Err(format!(
                "unknown property {property:?} for {kind} {entity:?}; valid properties: {}",
                if valid.is_empty() { "(none)".to_owned() } else { valid.join(", ") }
            ));
        }
    }
    let values = graph.unique_property_values(property, entity, entity_type).map_err(|e| e.to_string())?;
    Ok(ToolOutput::Json(Value::Array(values.iter().map(|v| json!({"values": v.to_json()})).collect())))
}

fn think(_: &mut KgContext<'_>, args: &Map<String, Value>) -> Result<ToolOutput, String> {
    Ok(ToolOutput::Text(str_arg(args, "thought").to_owned()))
}

#[cfg(test)]
mod tests {
    use super::super::{ToolCall, Toolbox};
    use super::*;
    use crate::graph::{props, GraphBuilder, NodeClass, Properties, RelClass, Schema};

    fn fixture() -> PropertyGraph {
        let schema = Schema {
            node_classes: vec![
                NodeClass { label: "Cevaz".into(), properties: vec!["bexame".into(), "key".into(), "tanu".into()] },
                NodeClass { label: "Egodpw".into(), properties: vec!["key".into(), "ukog".into()] },
            ],
            rel_classes: vec![RelClass {
                name: "EPUQOSS".into(),
                source: "Cevaz".into(),
                target: "Egodpw".into(),
                properties: vec!["uqpc".into()],
            }],
        };
        let mut b = GraphBuilder::with_schema(schema);
        let mut p = props([("key", "ab"), ("bexame", "zolu")]);
        p.insert("tanu".into(), PropertyValue::Number(12.5));
        let a = b.add_node("Cevaz", p).unwrap();
        let c = b.add_node("Cevaz", props([("key", "cd"), ("bexame", "zolu")])).unwrap();
        let e = b.add_node("Egodpw", props([("key", "ef"), ("ukog", "wim")])).unwrap();
        let mut r = Properties::new();
        r.insert("uqpc".into(), PropertyValue::Number(3.0));
        b.add_relationship("EPUQOSS", a, e, r).unwrap();
        b.add_relationship("EPUQOSS", c, e, Properties::new()).unwrap();
        b.build()
    }

    fn run(graph: &PropertyGraph, name: &str, args: Value) -> (Value, bool) {
        let mut reg = kg_registry(graph);
        let res = reg.dispatch(&ToolCall { call_id: "1".into(), name: name.into(), arguments: args });
        let content = serde_json::from_str(&res.content).unwrap_or(Value::String(res.content));
        (content, res.is_error)
    }

    #[test]
    fn four_tools_with_docstrings() {
        let g = fixture();
        let reg = kg_registry(&g);
        let names: Vec<&str> = reg.descriptors().iter().map(|d| d.name.as_str()).collect();
        assert_eq!(names, ["get_node_by_property", "get_all_nearest_neighbors", "get_unique_property_values", "think"]);
        assert!(reg.descriptors()[0].description.starts_with("Retrieve a specific node"));
        assert!(!reg.descriptors()[3].deterministic);
    }

    #[test]
    fn think_echoes() {
        let g = fixture();
        let (out, err) = run(&g, "think", json!({"thought": "plan: find node first"}));
        assert!(!err);
        assert_eq!(out, "plan: find node first");
    }

    #[test]
    fn node_lookup() {
        let g = fixture();
        let (out, err) = run(
            &g,
            "get_node_by_property",
            json!({"label": "Cevaz", "property_name": "bexame", "property_value": "zolu"}),
        );
        assert!(!err);
        assert_eq!(out, json!([{"key": "ab", "bexame": "zolu", "tanu": 12.5}, {"key": "cd", "bexame": "zolu"}]));
        let (none, err) = run(
            &g,
            "get_node_by_property",
            json!({"label": "Cevaz", "property_name": "bexame", "property_value": "nope"}),
        );
        assert!(!err);
        assert_eq!(none, json!([]));
    }

    #[test]
    fn numeric_strings_are_coerced() {
        let g = fixture();
        let (out, _) = run(
            &g,
            "get_node_by_property",
            json!({"label": "Cevaz", "property_name": "tanu", "property_value": "12.5"}),
        );
        assert_eq!(out.as_array().unwrap().len(), 1);
        let (out, _) =
            run(&g, "get_node_by_property", json!({"label": "Cevaz", "property_name": "tanu", "property_value": 12.5}));
        assert_eq!(out.as_array().unwrap().len(), 1);
    }

    #[test]
    fn lookup_errors_name_valid_options() {
        let g = fixture();
        let (msg, err) =
            run(&g, "get_node_by_property", json!({"label": "Nope", "property_name": "key", "property_value": "ab"}));
        assert!(err);
        assert!(msg.as_str().unwrap().contains("Cevaz, Egodpw"));
        let (msg, err) =
            run(&g, "get_node_by_property", json!({"label": "Cevaz", "property_name": "ukog", "property_value": "x"}));
        assert!(err);
        assert!(msg.as_str().unwrap().contains("bexame, key, tanu"));
    }

    #[test]
    fn neighbors_both_directions() {
        let g = fixture();
        let (out, err) = run(
            &g,
            "get_all_nearest_neighbors",
            json!({"label": "Egodpw", "property_name": "key", "property_value": "ef"}),
        );
        assert!(!err);
        let arr = out.as_array().unwrap();
        assert_eq!(arr.len(), 2);
        assert_eq!(arr[0]["direction"], "incoming");
        assert_eq!(arr[0]["node"]["properties"]["key"], "ab");
        assert_eq!(arr[0]["relationship"], json!({"type": "EPUQOSS", "properties": {"uqpc": 3.0}}));
        assert_eq!(arr[1]["center"], "ef");
    }

    #[test]
    fn unique_values() {
        let g = fixture();
        let (out, err) = run(
            &g,
            "get_unique_property_values",
            json!({"property_name": "key", "entity_name": "Cevaz", "entity_type": "node"}),
        );
        assert!(!err);
        assert_eq!(out, json!([{"values": "ab"}, {"values": "cd"}]));
        let (out, _) = run(
            &g,
            "get_unique_property_values",
            json!({"property_name": "uqpc", "entity_name": "EPUQOSS", "entity_type": "Relationship"}),
        );
        assert_eq!(out, json!([{"values": 3.0}]));
        let (_, err) = run(
            &g,
            "get_unique_property_values",
            json!({"property_name": "uqpc", "entity_name": "EPUQOSS", "entity_type": "edge"}),
        );
        assert!(err);
        let (_, err) = run(
            &g,
            "get_unique_property_values",
            json!({"property_name": "zzz", "entity_name": "Cevaz", "entity_type": "node"}),
        );
        assert!(err);
    }

    #[test]
    fn query_tools_are_deterministic() {
        let g = fixture();
        let args = json!({"label": "Cevaz", "property_name": "key", "property_value": "ab"});
        assert_eq!(run(&g, "get_all_nearest_neighbors", args.clone()), run(&g, "get_all_nearest_neighbors", args));
    }
}
