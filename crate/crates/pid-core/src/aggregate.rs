//! Final aggregation: attach symbols to the connectivity graph, associate
//! tag text with symbols, apply the reconciliation rule set, and emit the
//! structured outputs (two CSV tables plus a JSON dump).

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::PidGraph;
use crate::symbols::{SymbolClass, SymbolInstance};
use crate::text::TextBox;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DigitizationResult {
    pub symbols: Vec<SymbolInstance>,
    pub graph: PidGraph,
    pub texts: Vec<TextBox>,
}

// ---------------------------------------------------------------------------
// rule set

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassRule {
    pub class: u8,
    /// Labels failing this pattern are cleared.
    pub label_regex: Option<String>,
    /// Overrides any associated label outright.
    pub static_label: Option<String>,
    /// Symbols of this class must touch the graph; loose ones are flagged.
    pub require_connection: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleSet {
    pub pipe_label: String,
    pub classes: Vec<ClassRule>,
}

impl Default for RuleSet {
    fn default() -> Self {
        let mut classes = Vec::new();
        for class in 1..=32u8 {
            let label_regex = Some(
                match class {
                    26 => "^[A-Z]\\d$",
                    28 => "^[A-Z]{2}\\d{2}$",
                    _ => "^[A-Z]{2}-\\d{3}$",
                }
                .to_string(),
            );
            classes.push(ClassRule {
                class,
                label_regex,
                static_label: None,
                require_connection: true,
            });
        }
        RuleSet {
            pipe_label: "^\\d+\"-[A-Z]{2}-\\d{4}$".to_string(),
            classes,
        }
    }
}

impl RuleSet {
    pub fn rule_for(&self, class: SymbolClass) -> Option<&ClassRule> {
        let id = class.id()?;
        self.classes.iter().find(|r| r.class == id)
    }

    pub fn pipe_regex(&self) -> Result<regex::Regex> {
        Ok(regex::Regex::new(&self.pipe_label)?)
    }
}

// ---------------------------------------------------------------------------
// mapping

/// Attach each symbol to the edges incident to its nearest graph vertex.
/// Symbols whose nearest vertex is further than a quarter of their box
/// diagonal keep the attachment but are flagged ambiguous.
pub fn map_symbols_to_graph(symbols: &mut [SymbolInstance], graph: &PidGraph) {
    for s in symbols.iter_mut() {
        let c = s.bbox.centerf();
        let mut best: Option<(f64, usize)> = None;
        for (vi, v) in graph.vertices.iter().enumerate() {
            let d = ((v.x as f64 - c.0).powi(2) + (v.y as f64 - c.1).powi(2)).sqrt();
            if best.map(|(bd, _)| d < bd).unwrap_or(true) {
                best = Some((d, vi));
            }
        }
        s.edge_ids.clear();
        if let Some((d, vi)) = best {
            for (ei, e) in graph.edges.iter().enumerate() {
                if e.v1 == vi || e.v2 == vi {
                    s.edge_ids.push(ei);
                }
            }
            let diag = ((s.bbox.w as f64).powi(2) + (s.bbox.h as f64).powi(2)).sqrt();
            if d > diag / 4.0 {
                s.ambiguous = true;
            }
        }
    }
}

/// Collapse a string to its shape: digit runs become '#', letter runs '@',
/// everything else stays.
pub fn text_pattern(text: &str) -> String {
    let mut out = String::new();
    let mut last = '\0';
    for ch in text.chars() {
        let class = if ch.is_ascii_digit() {
            '#'
        } else if ch.is_ascii_alphabetic() {
            '@'
        } else {
            ch
        };
        if class != last || !(class == '#' || class == '@') {
            out.push(class);
        }
        last = class;
    }
    out
}

/// Associate tag text with symbols: among the k nearest non-pipe text boxes
/// take the closest one matching the class rule pattern; classes without a
/// rule fall back to the dominant text shape among the candidates. Each text
/// box is consumed at most once.
pub fn map_symbols_to_text(
    symbols: &mut [SymbolInstance],
    texts: &[TextBox],
    rules: &RuleSet,
    k: usize,
    max_dist: f64,
) -> Result<()> {
    let pipe_re = rules.pipe_regex()?;
    let candidates: Vec<usize> = (0..texts.len())
        .filter(|&i| !pipe_re.is_match(&texts[i].text))
        .collect();
    let mut used = vec![false; texts.len()];
    let mut order: Vec<usize> = (0..symbols.len()).collect();
    order.sort_by_key(|&i| (symbols[i].bbox.y, symbols[i].bbox.x));
    for si in order {
        let s = &symbols[si];
        if !s.label.is_empty() {
            continue; // already carries an embedded or earlier-assigned tag
        }
        let c = s.bbox.centerf();
        let mut near: Vec<(f64, usize)> = candidates
            .iter()
            .filter(|&&ti| !used[ti])
            .map(|&ti| {
                let tc = texts[ti].bbox.centerf();
                let d = ((tc.0 - c.0).powi(2) + (tc.1 - c.1).powi(2)).sqrt();
                (d, ti)
            })
            .filter(|&(d, _)| d <= max_dist)
            .collect();
        near.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        near.truncate(k);
        if near.is_empty() {
            continue;
        }
        let re = symbols[si]
            .class_id
            .id()
            .and_then(|_| rules.rule_for(symbols[si].class_id))
            .and_then(|r| r.label_regex.as_deref())
            .map(regex::Regex::new)
            .transpose()?;
        let pick = if let Some(re) = re {
            near.iter().find(|&&(_, ti)| re.is_match(&texts[ti].text)).copied()
        } else {
            // fall back to the dominant shape among the candidates
            let mut counts: HashMap<String, usize> = HashMap::new();
            for &(_, ti) in &near {
                *counts.entry(text_pattern(&texts[ti].text)).or_insert(0) += 1;
            }
            let dominant = counts
                .into_iter()
                .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
                .map(|(p, _)| p);
            dominant.and_then(|p| {
                near.iter()
                    .find(|&&(_, ti)| text_pattern(&texts[ti].text) == p)
                    .copied()
            })
        };
        if let Some((_, ti)) = pick {
            used[ti] = true;
            symbols[si].label = texts[ti].text.clone();
        }
    }
    Ok(())
}

/// Apply the rule set. The operation is idempotent: running it again over
/// its own output changes nothing.
pub fn reconcile(symbols: &mut [SymbolInstance], rules: &RuleSet) -> Result<()> {
    for s in symbols.iter_mut() {
        if let Some(rule) = rules.rule_for(s.class_id) {
            if let Some(static_label) = &rule.static_label {
                s.label = static_label.clone();
            } else if let Some(re) = &rule.label_regex {
                let re = regex::Regex::new(re)?;
                if !s.label.is_empty() && !re.is_match(&s.label) {
                    s.label.clear();
                }
            }
            if rule.require_connection && s.edge_ids.is_empty() {
                s.ambiguous = true;
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// output

fn join_ids(ids: &[usize]) -> String {
    ids.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(";")
}

/// Write `symbols.csv`, `pipelines.csv`, and `detections.json` under `dir`.
pub fn emit_result(result: &DigitizationResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let sym_path = dir.join("symbols.csv");
    let mut w = csv::Writer::from_path(&sym_path).map_err(Error::from)?;
    w.write_record(["symbol_id", "class_id", "x", "y", "w", "h", "label", "connected_edge_ids"])?;
    for (i, s) in result.symbols.iter().enumerate() {
        w.write_record([
            i.to_string(),
            s.class_id.to_string(),
            s.bbox.x.to_string(),
            s.bbox.y.to_string(),
            s.bbox.w.to_string(),
            s.bbox.h.to_string(),
            s.label.clone(),
            join_ids(&s.edge_ids),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&sym_path, e))?;

    let pipe_path = dir.join("pipelines.csv");
    let mut w = csv::Writer::from_path(&pipe_path).map_err(Error::from)?;
    w.write_record(["edge_id", "label", "x1", "y1", "x2", "y2", "style", "adjacent_edge_ids"])?;
    let adjacency = result.graph.adjacency();
    for (i, e) in result.graph.edges.iter().enumerate() {
        w.write_record([
            i.to_string(),
            e.label.clone(),
            e.p1.x.to_string(),
            e.p1.y.to_string(),
            e.p2.x.to_string(),
            e.p2.y.to_string(),
            format!("{:?}", e.style).to_lowercase(),
            join_ids(&adjacency[i]),
        ])?;
    }
    w.flush().map_err(|e| Error::io(&pipe_path, e))?;

    let json_path = dir.join("detections.json");
    std::fs::write(&json_path, serde_json::to_vec_pretty(result)?)
        .map_err(|e| Error::io(&json_path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Orientation, Point, Rect};
    use crate::graph::{build_graph, GraphConfig};
    use crate::lines::{LineSegment, LineStyle};

    fn sym(class: u8, x: i32, y: i32) -> SymbolInstance {
        SymbolInstance {
            class_id: SymbolClass::Id(class),
            bbox: Rect::new(x, y, 64, 64),
            score: 0.95,
            label: String::new(),
            edge_ids: Vec::new(),
            ambiguous: false,
        }
    }

    fn tb(text: &str, x: i32, y: i32) -> TextBox {
        TextBox {
            bbox: Rect::new(x, y, text.len() as i32 * 10, 14),
            text: text.to_string(),
            orientation: Orientation::Horizontal,
            confidence: 1.0,
        }
    }

    fn simple_graph() -> PidGraph {
        let segs = vec![LineSegment {
            p1: Point::new(0, 132),
            p2: Point::new(400, 132),
            orientation: Orientation::Horizontal,
            style: LineStyle::Solid,
        }];
        build_graph(&segs, &GraphConfig::default(), 5)
    }

    #[test]
    fn graph_mapping_nearest_vertex() {
        let graph = simple_graph();
        // center (12, 132): 12 px from the left vertex, inside diag/4 = 22.6
        let mut symbols = vec![sym(3, -20, 100)];
        map_symbols_to_graph(&mut symbols, &graph);
        assert_eq!(symbols[0].edge_ids, vec![0]);
        assert!(!symbols[0].ambiguous);
    }

    #[test]
    fn graph_mapping_flags_distant_symbol() {
        let graph = simple_graph();
        let mut symbols = vec![sym(3, 600, 500)];
        map_symbols_to_graph(&mut symbols, &graph);
        assert!(symbols[0].ambiguous);
    }

    #[test]
    fn pattern_collapse() {
        assert_eq!(text_pattern("AB-123"), "@-#");
        assert_eq!(text_pattern("4\"-PW-1024"), "#\"-@-#");
        assert_eq!(text_pattern("A1"), "@#");
    }

    #[test]
    fn text_association_uses_class_regex() {
        let rules = RuleSet::default();
        let mut symbols = vec![sym(5, 100, 100)];
        // nearest box fails the class pattern, a further one matches
        let texts = vec![tb("9999", 110, 170), tb("PV-123", 110, 200)];
        map_symbols_to_text(&mut symbols, &texts, &rules, 5, 300.0).unwrap();
        assert_eq!(symbols[0].label, "PV-123");
    }

    #[test]
    fn text_association_skips_pipe_labels() {
        let rules = RuleSet::default();
        let mut symbols = vec![sym(5, 100, 100)];
        let texts = vec![tb("4\"-PW-1024", 110, 170)];
        map_symbols_to_text(&mut symbols, &texts, &rules, 5, 300.0).unwrap();
        assert_eq!(symbols[0].label, "");
    }

    #[test]
    fn text_association_consumes_each_box_once() {
        let rules = RuleSet::default();
        let mut symbols = vec![sym(5, 100, 100), sym(7, 100, 250)];
        let texts = vec![tb("PV-123", 110, 170)];
        map_symbols_to_text(&mut symbols, &texts, &rules, 5, 300.0).unwrap();
        let labeled: Vec<&str> = symbols.iter().map(|s| s.label.as_str()).collect();
        assert_eq!(labeled.iter().filter(|l| !l.is_empty()).count(), 1);
    }

    #[test]
    fn pattern_fallback_without_rule() {
        let mut rules = RuleSet::default();
        rules.classes.retain(|r| r.class != 5);
        let mut symbols = vec![sym(5, 100, 100)];
        let texts = vec![tb("PV-123", 110, 170), tb("FT-201", 110, 200), tb("%%", 105, 160)];
        map_symbols_to_text(&mut symbols, &texts, &rules, 5, 300.0).unwrap();
        assert_eq!(symbols[0].label, "PV-123"); // dominant shape @-#, nearest of them
    }

    #[test]
    fn reconcile_clears_bad_labels_and_is_idempotent() {
        let rules = RuleSet::default();
        let mut symbols = vec![sym(5, 0, 0), sym(6, 0, 100)];
        symbols[0].label = "PV-123".into();
        symbols[0].edge_ids = vec![0];
        symbols[1].label = "garbage!".into();
        reconcile(&mut symbols, &rules).unwrap();
        assert_eq!(symbols[0].label, "PV-123");
        assert!(!symbols[0].ambiguous);
        assert_eq!(symbols[1].label, "");
        assert!(symbols[1].ambiguous);
        let snapshot = serde_json::to_string(&symbols).unwrap();
        reconcile(&mut symbols, &rules).unwrap();
        assert_eq!(serde_json::to_string(&symbols).unwrap(), snapshot);
    }

    #[test]
    fn emit_round_trips_and_quotes_inch_marks() {
        let graph = {
            let segs = vec![
                LineSegment {
                    p1: Point::new(0, 50),
                    p2: Point::new(200, 50),
                    orientation: Orientation::Horizontal,
                    style: LineStyle::Dashed,
                },
                LineSegment {
                    p1: Point::new(100, 50),
                    p2: Point::new(100, 150),
                    orientation: Orientation::Vertical,
                    style: LineStyle::Solid,
                },
            ];
            let mut g = build_graph(&segs, &GraphConfig::default(), 5);
            g.edges[0].label = "4\"-PW-1024".into();
            g
        };
        let mut symbols = vec![sym(26, 10, 10)];
        symbols[0].label = "A1".into();
        symbols[0].edge_ids = vec![0, 1];
        let result = DigitizationResult {
            symbols,
            graph,
            texts: vec![tb("A1", 20, 20)],
        };
        let dir = tempfile::tempdir().unwrap();
        emit_result(&result, dir.path()).unwrap();

        let mut rdr = csv::Reader::from_path(dir.path().join("symbols.csv")).unwrap();
        let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), 1);
        assert_eq!(&rows[0][1], "26");
        assert_eq!(&rows[0][7], "0;1");

        let mut rdr = csv::Reader::from_path(dir.path().join("pipelines.csv")).unwrap();
        let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), 3);
        // the inch mark survives CSV quoting
        assert!(rows.iter().any(|r| &r[1] == "4\"-PW-1024"));
        assert!(rows.iter().any(|r| &r[7] != ""));

        let back: DigitizationResult = serde_json::from_slice(
            &std::fs::read(dir.path().join("detections.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(back.symbols.len(), 1);
        assert_eq!(back.graph.edges.len(), 3);
    }

    #[test]
    fn ruleset_json_round_trip() {
        let rules = RuleSet::default();
        let json = serde_json::to_string(&rules).unwrap();
        let back: RuleSet = serde_json::from_str(&json).unwrap();
        assert_eq!(back.classes.len(), 32);
        assert_eq!(back.pipe_label, rules.pipe_label);
    }
}
