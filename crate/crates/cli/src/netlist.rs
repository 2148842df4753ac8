//! Plain-text netlist format.
//!
//! ```text
//! # master-slave register
//! [osc R]
//! alpha = 0.1
//!
//! [osc k]
//!
//! [edge R k]
//! rho = 0.05
//! gamma = 0.1
//! directed = true
//!
//! [drive k]
//! psi_d = 3.141592653589793
//! gamma_d = 0.1
//!
//! [sim]
//! tau_end = 3000
//! h = 0.01
//! seed = 42
//! ```
//!
//! `#` starts a comment. A directed edge acts only on its second node. The
//! reference unit is inferred: the first oscillator that has outgoing
//! directed edges and is acted on by nothing.

use std::fmt::Write as _;

use osc_logic::dynamics::{CouplingEdge, DrivenSource, NetworkSpec, OscillatorSpec, DEFAULT_ALPHA};
use osc_logic::gates::{DEFAULT_SEED, DEFAULT_TAU_END};
use osc_logic::integrator::DEFAULT_STEP;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetlistError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("section {section} (line {line}): {message}")]
    Semantic {
        section: String,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub tau_end: f64,
    pub h: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            tau_end: DEFAULT_TAU_END,
            h: DEFAULT_STEP,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Osc,
    Edge,
    Drive,
    Sim,
}

impl Kind {
    fn keys(self) -> &'static [&'static str] {
        match self {
            Kind::Osc => &["alpha"],
            Kind::Edge => &["rho", "gamma", "directed"],
            Kind::Drive => &["psi_d", "gamma_d"],
            Kind::Sim => &["tau_end", "h", "seed"],
        }
    }
}

struct Section {
    kind: Kind,
    args: Vec<String>,
    header: String,
    line: usize,
    values: Vec<(String, String, usize)>,
}

impl Section {
    fn get(&self, key: &str) -> Option<(&str, usize)> {
        self.values
            .iter()
            .find(|(k, _, _)| k == key)
            .map(|(_, v, l)| (v.as_str(), *l))
    }

    fn number(&self, key: &str, default: Option<f64>) -> Result<f64, NetlistError> {
        match self.get(key) {
            Some((text, line)) => parse_number(text, line),
            None => default.ok_or_else(|| NetlistError::Semantic {
                section: self.header.clone(),
                line: self.line,
                message: format!("missing key '{key}'"),
            }),
        }
    }
}

fn parse_number(text: &str, line: usize) -> Result<f64, NetlistError> {
    let bad = || NetlistError::Syntax {
        line,
        message: format!("'{text}' is not a finite decimal number"),
    };
    // Rust also accepts "inf" and "nan"; the format does not
    if !text.chars().all(|c| c.is_ascii_digit() || "+-.eE".contains(c)) {
        return Err(bad());
    }
    text.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(bad)
}

fn syntax(line: usize, message: impl Into<String>) -> NetlistError {
    NetlistError::Syntax {
        line,
        message: message.into(),
    }
}

fn split_sections(text: &str) -> Result<Vec<Section>, NetlistError> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(inner) = content.strip_prefix('[') {
            let inner = inner
                .strip_suffix(']')
                .ok_or_else(|| syntax(line, "section header must end with ']'"))?;
            let words: Vec<&str> = inner.split_whitespace().collect();
            let (kind, arity) = match words.first().copied() {
                Some("osc") => (Kind::Osc, 1),
                Some("edge") => (Kind::Edge, 2),
                Some("drive") => (Kind::Drive, 1),
                Some("sim") => (Kind::Sim, 0),
                Some(other) => return Err(syntax(line, format!("unknown section '{other}'"))),
                None => return Err(syntax(line, "empty section header")),
            };
            if words.len() != arity + 1 {
                return Err(syntax(
                    line,
                    format!("section '{}' takes {arity} argument(s)", words[0]),
                ));
            }
            if kind == Kind::Sim && sections.iter().any(|s| s.kind == Kind::Sim) {
                return Err(syntax(line, "duplicate [sim] section"));
            }
            sections.push(Section {
                kind,
                args: words[1..].iter().map(|w| w.to_string()).collect(),
                header: format!("[{}]", words.join(" ")),
                line,
                values: Vec::new(),
            });
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| syntax(line, "expected 'key = value'"))?;
        let (key, value) = (key.trim(), value.trim());
        let section = sections
            .last_mut()
            .ok_or_else(|| syntax(line, "key outside of any section"))?;
        if !section.kind.keys().contains(&key) {
            return Err(syntax(
                line,
                format!(
                    "unknown key '{key}' in {} (allowed: {})",
                    section.header,
                    section.kind.keys().join(", ")
                ),
            ));
        }
        if section.get(key).is_some() {
            return Err(syntax(line, format!("duplicate key '{key}'")));
        }
        if value.is_empty() {
            return Err(syntax(line, format!("key '{key}' has no value")));
        }
        section.values.push((key.to_string(), value.to_string(), line));
    }
    Ok(sections)
}

/// The first oscillator with outgoing directed edges that nothing acts on.
pub fn infer_reference(spec: &NetworkSpec) -> Option<String> {
    let acted_on = spec.driven_nodes();
    spec.oscillators
        .iter()
        .map(|o| o.id.as_str())
        .find(|id| !acted_on.contains(id) && spec.edges.iter().any(|e| e.directed && e.from == *id))
        .map(str::to_string)
}

pub fn parse_netlist(text: &str) -> Result<(NetworkSpec, SimConfig), NetlistError> {
    let sections = split_sections(text)?;
    let mut spec = NetworkSpec::default();
    let mut sim = SimConfig::default();
    for s in sections.iter().filter(|s| s.kind == Kind::Osc) {
        let id = &s.args[0];
        if spec.index_of(id).is_some() {
            return Err(NetlistError::Semantic {
                section: s.header.clone(),
                line: s.line,
                message: format!("duplicate oscillator id '{id}'"),
            });
        }
        let alpha = s.number("alpha", Some(DEFAULT_ALPHA))?;
        if alpha <= 0.0 {
            return Err(NetlistError::Semantic {
                section: s.header.clone(),
                line: s.line,
                message: format!("alpha must be positive, got {alpha}"),
            });
        }
        spec.oscillators.push(OscillatorSpec::new(id.clone(), alpha));
    }
    let check_node = |s: &Section, id: &str, spec: &NetworkSpec| {
        if spec.index_of(id).is_none() {
            return Err(NetlistError::Semantic {
                section: s.header.clone(),
                line: s.line,
                message: format!("unknown oscillator '{id}'"),
            });
        }
        Ok(())
    };
    for s in &sections {
        match s.kind {
            Kind::Osc => {}
            Kind::Edge => {
                check_node(s, &s.args[0], &spec)?;
                check_node(s, &s.args[1], &spec)?;
                let directed = match s.get("directed") {
                    None => false,
                    Some(("true", _)) => true,
                    Some(("false", _)) => false,
                    Some((other, line)) => {
                        return Err(syntax(line, format!("directed must be true or false, got '{other}'")))
                    }
                };
                spec.edges.push(CouplingEdge {
                    from: s.args[0].clone(),
                    to: s.args[1].clone(),
                    rho: s.number("rho", Some(0.0))?,
                    gamma: s.number("gamma", Some(0.0))?,
                    directed,
                });
            }
            Kind::Drive => {
                check_node(s, &s.args[0], &spec)?;
                spec.sources.push(DrivenSource::new(
                    s.args[0].clone(),
                    s.number("psi_d", Some(0.0))?,
                    s.number("gamma_d", None)?,
                ));
            }
            Kind::Sim => {
                sim.tau_end = s.number("tau_end", Some(sim.tau_end))?;
                sim.h = s.number("h", Some(sim.h))?;
                if let Some((text, line)) = s.get("seed") {
                    sim.seed = text
                        .parse()
                        .map_err(|_| syntax(line, format!("seed must be a non-negative integer, got '{text}'")))?;
                }
                if !(sim.tau_end > 0.0 && sim.h > 0.0) {
                    return Err(NetlistError::Semantic {
                        section: s.header.clone(),
                        line: s.line,
                        message: "tau_end and h must be positive".into(),
                    });
                }
            }
        }
    }
    spec.reference = infer_reference(&spec);
    if let Err(e) = spec.compile() {
        return Err(NetlistError::Semantic {
            section: "network".into(),
            line: 0,
            message: e.to_string(),
        });
    }
    Ok((spec, sim))
}

/// Writes a netlist that parses back to `spec` and `sim`. Numbers use the
/// shortest round-trip decimal form.
pub fn emit_netlist(spec: &NetworkSpec, sim: &SimConfig) -> String {
    let mut out = String::new();
    for o in &spec.oscillators {
        let _ = writeln!(out, "[osc {}]\nalpha = {}\n", o.id, o.alpha);
    }
    for e in &spec.edges {
        let _ = writeln!(
            out,
            "[edge {} {}]\nrho = {}\ngamma = {}\ndirected = {}\n",
            e.from, e.to, e.rho, e.gamma, e.directed
        );
    }
    for d in &spec.sources {
        let _ = writeln!(
            out,
            "[drive {}]\npsi_d = {}\ngamma_d = {}\n",
            d.target, d.psi_d, d.gamma_d
        );
    }
    let _ = writeln!(
        out,
        "[sim]\ntau_end = {}\nh = {}\nseed = {}",
        sim.tau_end, sim.h, sim.seed
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const NOT: &str = "\
# NOT gate, input bit 1
[osc j]
[osc k]
alpha = 0.1
[edge j k]
rho = 0.05
[drive j]
psi_d = 3.141592653589793
gamma_d = 0.1
";

    #[test]
    fn not_document_structure() {
        let (spec, sim) = parse_netlist(NOT).unwrap();
        assert_eq!(spec.oscillators.len(), 2);
        assert_eq!(spec.edges.len(), 1);
        assert_eq!(spec.sources.len(), 1);
        assert_eq!(spec.reference, None);
        assert_eq!(
            sim,
            SimConfig {
                tau_end: 3000.0,
                h: 0.01,
                seed: 42
            }
        );
    }

    #[test]
    fn dangling_edge_names_section() {
        let err = parse_netlist("[osc a]\n[edge a b]\ngamma = 0.1\n").unwrap_err();
        match err {
            NetlistError::Semantic { section, line, .. } => {
                assert_eq!(section, "[edge a b]");
                assert_eq!(line, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        for (text, line) in [
            ("[osc a]\nbeta = 1\n", 2),
            ("[osc a]\nalpha = nan\n", 2),
            ("[osc a]\nalpha = 1e400\n", 2),
            ("[osc a\n", 1),
            ("alpha = 1\n", 1),
            ("[osc a]\n\n[wire a b]\n", 3),
            ("[osc a]\nalpha = 0.1\nalpha = 0.2\n", 3),
            ("[osc a]\n[osc b]\n[edge a b]\ndirected = yes\n", 4),
        ] {
            match parse_netlist(text) {
                Err(NetlistError::Syntax { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!(matches!(
            parse_netlist("[osc a]\n[osc a]\n"),
            Err(NetlistError::Semantic { .. })
        ));
    }

    #[test]
    fn reference_is_inferred_from_master_slave_edges() {
        let text = "[osc R]\n[osc k]\n[edge R k]\nrho = 0.05\ngamma = 0.1\ndirected = true\n";
        let (spec, _) = parse_netlist(text).unwrap();
        assert_eq!(spec.reference.as_deref(), Some("R"));
    }

    #[test]
    fn round_trip() {
        let (spec, sim) = parse_netlist(NOT).unwrap();
        let (again, sim2) = parse_netlist(&emit_netlist(&spec, &sim)).unwrap();
        assert_eq!(spec, again);
        assert_eq!(sim, sim2);
    }
}
