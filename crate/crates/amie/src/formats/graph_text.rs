//! Line-oriented text format for causal graphs and binary networks.
//!
//! ```text
//! nodes 4 outcome 3
//! obs lat obs obs
//! edge 0 1
//! edge 2 1
//! cpt 1 0 0.25
//! ```
//!
//! `#` starts a comment. An optional `label <i> <name>` line renames a node.
//! `cpt <node> <row> <p>` gives `P(node = 1)` for one row of the node's table
//! (rows follow the ascending parent list with the first parent as the low
//! bit); a net needs every row of every node.

use std::fmt::Write as _;

use amie_core::graph::CausalDag;
use amie_core::synth::BayesNet;

use super::FormatError;

struct Parsed {
    dag: CausalDag,
    cpts: Vec<(usize, usize, f64, usize)>,
}

fn parse_usize(tok: Option<&str>, line: usize, what: &str) -> Result<usize, FormatError> {
    let tok = tok.ok_or_else(|| FormatError::at(line, 1, format!("missing {what}")))?;
    tok.parse().map_err(|_| FormatError::at(line, 1, format!("invalid {what} `{tok}`")))
}

fn parse(text: &str) -> Result<Parsed, FormatError> {
    let mut header: Option<(usize, usize)> = None;
    let mut flags: Option<Vec<bool>> = None;
    let mut labels: Vec<Option<String>> = Vec::new();
    let mut edges = Vec::new();
    let mut cpts = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut toks = body.split_whitespace();
        let head = toks.next().unwrap_or_default();
        match head {
            "nodes" => {
                if header.is_some() {
                    return Err(FormatError::at(line, 1, "duplicate header"));
                }
                let n = parse_usize(toks.next(), line, "node count")?;
                if toks.next() != Some("outcome") {
                    return Err(FormatError::at(line, 1, "expected `nodes <n> outcome <i>`"));
                }
                let y = parse_usize(toks.next(), line, "outcome index")?;
                header = Some((n, y));
                labels = vec![None; n];
            }
            "obs" | "lat" => {
                let (n, _) = header.ok_or_else(|| FormatError::at(line, 1, "flags before header"))?;
                let f: Vec<bool> = body
                    .split_whitespace()
                    .map(|t| match t {
                        "obs" => Ok(true),
                        "lat" => Ok(false),
                        other => Err(FormatError::at(line, 1, format!("unknown flag `{other}`"))),
                    })
                    .collect::<Result<_, _>>()?;
                if f.len() != n {
                    return Err(FormatError::at(line, 1, format!("{} flags for {n} nodes", f.len())));
                }
                flags = Some(f);
            }
            "label" => {
                let i = parse_usize(toks.next(), line, "node index")?;
                let name = toks.next().ok_or_else(|| FormatError::at(line, 1, "missing label"))?;
                let slot =
                    labels.get_mut(i).ok_or_else(|| FormatError::at(line, 1, format!("node {i} out of range")))?;
                *slot = Some(name.to_string());
            }
            "edge" => {
                let u = parse_usize(toks.next(), line, "edge source")?;
                let v = parse_usize(toks.next(), line, "edge target")?;
                edges.push((u, v));
            }
            "cpt" => {
                let node = parse_usize(toks.next(), line, "node index")?;
                let row = parse_usize(toks.next(), line, "row index")?;
                let tok = toks.next().ok_or_else(|| FormatError::at(line, 1, "missing probability"))?;
                let p: f64 =
                    tok.parse().map_err(|_| FormatError::at(line, 1, format!("invalid probability `{tok}`")))?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(FormatError::at(line, 1, format!("probability {p} outside [0, 1]")));
                }
                cpts.push((node, row, p, line));
            }
            other => return Err(FormatError::at(line, 1, format!("unknown directive `{other}`"))),
        }
    }
    let (n, y) = header.ok_or_else(|| FormatError::at(1, 1, "missing `nodes` header"))?;
    let observed = flags.unwrap_or_else(|| vec![true; n]);
    let labels: Vec<String> = labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| {
            l.unwrap_or_else(|| {
                if i == y {
                    "Y".into()
                } else if observed[i] {
                    format!("X{i}")
                } else {
                    format!("U{i}")
                }
            })
        })
        .collect();
    let dag = CausalDag::new(labels, &edges, observed, y).map_err(FormatError::from_core)?;
    Ok(Parsed { dag, cpts })
}

pub fn parse_graph(text: &str) -> Result<CausalDag, FormatError> {
    let parsed = parse(text)?;
    if let Some(&(_, _, _, line)) = parsed.cpts.first() {
        return Err(FormatError::at(line, 1, "graph text must not carry `cpt` lines"));
    }
    Ok(parsed.dag)
}

pub fn parse_net(text: &str) -> Result<BayesNet, FormatError> {
    let Parsed { dag, cpts } = parse(text)?;
    let mut tables: Vec<Vec<Option<f64>>> =
        (0..dag.node_count()).map(|v| vec![None; 1 << dag.parents(v).len()]).collect();
    for (node, row, p, line) in cpts {
        let slot = tables
            .get_mut(node)
            .and_then(|t| t.get_mut(row))
            .ok_or_else(|| FormatError::at(line, 1, format!("no row {row} for node {node}")))?;
        if slot.replace(p).is_some() {
            return Err(FormatError::at(line, 1, format!("row {row} of node {node} given twice")));
        }
    }
    let tables = tables
        .into_iter()
        .enumerate()
        .map(|(v, t)| {
            t.into_iter()
                .enumerate()
                .map(|(r, p)| p.ok_or_else(|| FormatError::at(0, 0, format!("missing row {r} of node {v}"))))
                .collect::<Result<Vec<f64>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    BayesNet::new(dag, tables).map_err(FormatError::from_core)
}

fn write_structure(dag: &CausalDag, out: &mut String) {
    let _ = writeln!(out, "nodes {} outcome {}", dag.node_count(), dag.outcome());
    let flags: Vec<&str> = dag.observed_flags().iter().map(|&o| if o { "obs" } else { "lat" }).collect();
    let _ = writeln!(out, "{}", flags.join(" "));
    for v in 0..dag.node_count() {
        let _ = writeln!(out, "label {v} {}", dag.label(v));
    }
    for (u, v) in dag.edges() {
        let _ = writeln!(out, "edge {u} {v}");
    }
}

pub fn write_graph(dag: &CausalDag) -> String {
    let mut out = String::new();
    write_structure(dag, &mut out);
    out
}

pub fn write_net(net: &BayesNet) -> String {
    let mut out = String::new();
    write_structure(net.dag(), &mut out);
    for (v, table) in net.tables().iter().enumerate() {
        for (r, p) in table.iter().enumerate() {
            let _ = writeln!(out, "cpt {v} {r} {p:?}");
        }
    }
    out
}
