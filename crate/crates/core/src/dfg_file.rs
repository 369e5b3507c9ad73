//! Reader for DFG definition files.
//!
//! ```text
//! # comment
//! [model]
//! id = 0
//! name = opt
//! size_bytes = 6000000000
//!
//! [dfg]
//! id = dialogue
//! task answer model=opt runtime_s=0.6 input_bytes=2048 output_bytes=4096
//! task respond runtime_s=0.01 input_bytes=4096 output_bytes=4096
//! answer -> respond
//! ```
//!
//! A file is a sequence of `[model]` and `[dfg]` sections. Model sections hold
//! `key = value` lines for `id` (0..63), `name` and `size_bytes`. A DFG section
//! starts with `id = <name>` followed by `task` lines and edge lines. A task line
//! is `task <id>` followed by `key=value` attributes: `runtime_s` (required),
//! `model` (a model name; omit for model-less tasks), `input_bytes` and
//! `output_bytes` (default 0). Edge lines are `a -> b`, and may be chained as
//! `a -> b -> c`. Text after `#` is ignored.

use std::path::Path;

use crate::error::{Error, Result};
use crate::workflow::{Catalog, Dfg, ModelSpec, TaskSpec};

const BUILTIN: &str = include_str!("../data/builtin.dfg");

/// The four shipped pipelines and their eight-model catalog.
pub fn builtin_workflows() -> Catalog {
    parse_catalog(BUILTIN, "builtin.dfg").expect("shipped catalog is valid")
}

pub fn load_catalog(path: &Path) -> Result<Catalog> {
    let text = std::fs::read_to_string(path)?;
    parse_catalog(&text, &path.display().to_string())
}

#[derive(Default)]
struct ModelDraft {
    line: usize,
    id: Option<u32>,
    name: Option<String>,
    size: Option<u64>,
}

#[derive(Default)]
struct DfgDraft {
    line: usize,
    id: Option<String>,
    // Model names are resolved once every model section has been read.
    tasks: Vec<(usize, String, Option<String>, f64, u64, u64)>,
    edges: Vec<(String, String)>,
}

enum Section {
    None,
    Model(ModelDraft),
    Dfg(DfgDraft),
}

pub fn parse_catalog(text: &str, origin: &str) -> Result<Catalog> {
    let err = |line: usize, reason: String| Error::Parse { path: origin.into(), line, reason };

    let mut models: Vec<ModelDraft> = Vec::new();
    let mut dfgs: Vec<DfgDraft> = Vec::new();
    let mut section = Section::None;

    let close = |section: Section, models: &mut Vec<ModelDraft>, dfgs: &mut Vec<DfgDraft>| {
        match section {
            Section::None => {}
            Section::Model(m) => models.push(m),
            Section::Dfg(d) => dfgs.push(d),
        }
    };

    for (n, raw) in text.lines().enumerate() {
        let lineno = n + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        match line {
            "[model]" => {
                close(std::mem::replace(&mut section, Section::None), &mut models, &mut dfgs);
                section = Section::Model(ModelDraft { line: lineno, ..Default::default() });
                continue;
            }
            "[dfg]" => {
                close(std::mem::replace(&mut section, Section::None), &mut models, &mut dfgs);
                section = Section::Dfg(DfgDraft { line: lineno, ..Default::default() });
                continue;
            }
            _ if line.starts_with('[') => {
                return Err(err(lineno, format!("unknown section {line}")));
            }
            _ => {}
        }
        match &mut section {
            Section::None => return Err(err(lineno, "content outside of a section".into())),
            Section::Model(m) => {
                let (k, v) = split_kv(line).ok_or_else(|| err(lineno, "expected key = value".into()))?;
                match k {
                    "id" => m.id = Some(v.parse().map_err(|e| err(lineno, format!("id: {e}")))?),
                    "name" => m.name = Some(v.to_string()),
                    "size_bytes" => {
                        m.size = Some(v.parse().map_err(|e| err(lineno, format!("size_bytes: {e}")))?)
                    }
                    _ => return Err(err(lineno, format!("unknown model key `{k}`"))),
                }
            }
            Section::Dfg(d) => {
                if let Some(rest) = line.strip_prefix("task ") {
                    d.tasks.push(parse_task(rest).map_err(|r| err(lineno, r))?);
                    d.tasks.last_mut().unwrap().0 = lineno;
                } else if line.contains("->") {
                    let parts: Vec<&str> = line.split("->").map(str::trim).collect();
                    if parts.iter().any(|p| p.is_empty() || p.contains(char::is_whitespace)) {
                        return Err(err(lineno, format!("malformed edge `{line}`")));
                    }
                    for w in parts.windows(2) {
                        d.edges.push((w[0].to_string(), w[1].to_string()));
                    }
                } else if let Some((k, v)) = split_kv(line) {
                    match k {
                        "id" => d.id = Some(v.to_string()),
                        _ => return Err(err(lineno, format!("unknown dfg key `{k}`"))),
                    }
                } else {
                    return Err(err(lineno, format!("unrecognized line `{line}`")));
                }
            }
        }
    }
    close(section, &mut models, &mut dfgs);

    let mut specs = Vec::with_capacity(models.len());
    for m in models {
        let id = m.id.ok_or_else(|| err(m.line, "model without id".into()))?;
        let name = m.name.ok_or_else(|| err(m.line, "model without name".into()))?;
        let size = m.size.ok_or_else(|| err(m.line, "model without size_bytes".into()))?;
        if specs.iter().any(|s: &ModelSpec| s.name == name) {
            return Err(err(m.line, format!("duplicate model name `{name}`")));
        }
        specs.push(ModelSpec::new(id, name, size).map_err(|e| err(m.line, e.to_string()))?);
    }

    let mut graphs = Vec::with_capacity(dfgs.len());
    for d in dfgs {
        let id = d.id.ok_or_else(|| err(d.line, "dfg without id".into()))?;
        let mut tasks = Vec::with_capacity(d.tasks.len());
        for (line, tid, model, runtime_s, input_bytes, output_bytes) in d.tasks {
            let model = match model {
                None => None,
                Some(name) => Some(
                    specs
                        .iter()
                        .find(|s| s.name == name)
                        .ok_or_else(|| err(line, format!("unknown model `{name}`")))?
                        .id,
                ),
            };
            tasks.push(TaskSpec { id: tid, model, runtime_s, input_bytes, output_bytes });
        }
        graphs.push(Dfg::new(id, tasks, &d.edges).map_err(|e| err(d.line, e.to_string()))?);
    }

    Catalog::new(specs, graphs).map_err(|e| err(0, e.to_string()))
}

fn split_kv(line: &str) -> Option<(&str, &str)> {
    let (k, v) = line.split_once('=')?;
    Some((k.trim(), v.trim()))
}

fn parse_task(rest: &str) -> Result<(usize, String, Option<String>, f64, u64, u64), String> {
    let mut words = rest.split_whitespace();
    let id = words.next().ok_or("task without id")?.to_string();
    let (mut model, mut runtime, mut input, mut output) = (None, None, 0, 0);
    for w in words {
        let (k, v) = w.split_once('=').ok_or_else(|| format!("expected key=value, got `{w}`"))?;
        match k {
            "model" => model = Some(v.to_string()),
            "runtime_s" => runtime = Some(v.parse::<f64>().map_err(|e| format!("runtime_s: {e}"))?),
            "input_bytes" => input = v.parse().map_err(|e| format!("input_bytes: {e}"))?,
            "output_bytes" => output = v.parse().map_err(|e| format!("output_bytes: {e}"))?,
            _ => return Err(format!("unknown task attribute `{k}`")),
        }
    }
    let runtime = runtime.ok_or_else(|| format!("task `{id}` without runtime_s"))?;
    Ok((0, id, model, runtime, input, output))
}
