//! Formation template registry.
//!
//! Templates live in a line-oriented text document:
//!
//! ```text
//! # comment
//! @label LCB Left Centre Back
//! formation,label,x,y
//! 442,LCB,-36,9.33
//! ```
//!
//! `@label` lines declare the position-label taxonomy; every slot label must
//! be declared when at least one `@label` line is present. The header row must
//! precede the first slot row. A formation's rows must be contiguous, and
//! templates and slots keep their document order.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Position;

/// Bundled default template set.
pub const DEFAULT_TEMPLATES: &str = include_str!("../data/templates.csv");

const HEADER: &str = "formation,label,x,y";

/// Outfielder counts a template may have.
pub const OUTFIELDER_COUNTS: [usize; 3] = [8, 9, 10];

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PositionLabel(String);

impl PositionLabel {
    pub fn new(code: impl Into<String>) -> Self {
        PositionLabel(code.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PositionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for PositionLabel {
    fn from(s: &str) -> Self {
        PositionLabel(s.to_owned())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabelInfo {
    pub code: PositionLabel,
    pub description: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Slot {
    pub label: PositionLabel,
    pub position: Position,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FormationTemplate {
    name: String,
    slots: Vec<Slot>,
}

impl FormationTemplate {
    /// Builds a template, checking slot count and label uniqueness.
    pub fn new(name: impl Into<String>, slots: Vec<Slot>) -> Result<Self> {
        let template = FormationTemplate { name: name.into(), slots };
        if let Some(v) = template.violations(&[]).into_iter().next() {
            return Err(Error::Template(v));
        }
        Ok(template)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn outfielder_count(&self) -> usize {
        self.slots.len()
    }

    fn violations(&self, taxonomy: &[LabelInfo]) -> Vec<Violation> {
        let mut out = Vec::new();
        if !OUTFIELDER_COUNTS.contains(&self.slots.len()) {
            out.push(Violation::SlotCount { formation: self.name.clone(), count: self.slots.len() });
        }
        let mut seen = HashSet::new();
        let mut reported = HashSet::new();
        for slot in &self.slots {
            if !seen.insert(&slot.label) && reported.insert(&slot.label) {
                out.push(Violation::DuplicateLabel { formation: self.name.clone(), label: slot.label.clone() });
            }
            if !taxonomy.is_empty() && !taxonomy.iter().any(|l| l.code == slot.label) {
                out.push(Violation::UnknownLabel { formation: self.name.clone(), label: slot.label.clone() });
            }
        }
        out
    }
}

/// Axis-aligned box in template coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemplateBounds {
    pub min_x: f64,
    pub max_x: f64,
    pub min_y: f64,
    pub max_y: f64,
}

impl TemplateBounds {
    /// Tight box around every slot of every template.
    pub fn enclosing<'a>(templates: impl IntoIterator<Item = &'a FormationTemplate>) -> Result<Self> {
        let mut bounds: Option<TemplateBounds> = None;
        for slot in templates.into_iter().flat_map(|t| &t.slots) {
            let p = slot.position;
            let b = bounds.get_or_insert(TemplateBounds { min_x: p.x, max_x: p.x, min_y: p.y, max_y: p.y });
            b.min_x = b.min_x.min(p.x);
            b.max_x = b.max_x.max(p.x);
            b.min_y = b.min_y.min(p.y);
            b.max_y = b.max_y.max(p.y);
        }
        bounds.ok_or_else(|| Error::invalid("cannot bound an empty template set"))
    }

    /// Extent along the attacking direction.
    pub fn length(&self) -> f64 {
        self.max_x - self.min_x
    }

    /// Extent across the pitch.
    pub fn width(&self) -> f64 {
        self.max_y - self.min_y
    }
}

/// A problem found while validating a template document.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum Violation {
    #[error("formation {0:?} is defined more than once")]
    DuplicateFormation(String),
    #[error("formation {formation:?} has {count} slots, expected 8, 9 or 10")]
    SlotCount { formation: String, count: usize },
    #[error("formation {formation:?} repeats label {label}")]
    DuplicateLabel { formation: String, label: PositionLabel },
    #[error("formation {formation:?} uses undeclared label {label}")]
    UnknownLabel { formation: String, label: PositionLabel },
    #[error("label {0} is declared more than once")]
    DuplicateTaxonomyLabel(PositionLabel),
    #[error("document defines no templates")]
    Empty,
}

/// Syntactically valid template document, not yet checked for invariants.
#[derive(Clone, Debug, PartialEq)]
pub struct TemplateDocument {
    pub taxonomy: Vec<LabelInfo>,
    pub templates: Vec<FormationTemplate>,
    violations: Vec<Violation>,
}

impl TemplateDocument {
    pub fn parse(text: &str) -> Result<Self> {
        let mut taxonomy: Vec<LabelInfo> = Vec::new();
        let mut templates: Vec<FormationTemplate> = Vec::new();
        let mut violations = Vec::new();
        let mut header_seen = false;

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx as u64 + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("@label") {
                let rest = rest.trim();
                let (code, description) = rest.split_once(char::is_whitespace).unwrap_or((rest, ""));
                if code.is_empty() {
                    return Err(Error::parse(line_no, "@label without a code"));
                }
                let code = PositionLabel::new(code);
                if taxonomy.iter().any(|l| l.code == code) {
                    violations.push(Violation::DuplicateTaxonomyLabel(code.clone()));
                }
                taxonomy.push(LabelInfo { code, description: description.trim().to_owned() });
                continue;
            }
            if !header_seen {
                let normalized: String = line.chars().filter(|c| !c.is_whitespace()).collect();
                if normalized != HEADER {
                    return Err(Error::parse(line_no, format!("expected header row `{HEADER}`")));
                }
                header_seen = true;
                continue;
            }

            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let [name, label, x, y] = fields[..] else {
                return Err(Error::parse(line_no, format!("expected 4 fields, found {}", fields.len())));
            };
            if name.is_empty() || label.is_empty() {
                return Err(Error::parse(line_no, "empty formation name or label"));
            }
            let coord = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(line_no, format!("bad coordinate {s:?}")))
            };
            let slot = Slot { label: PositionLabel::new(label), position: Position::new(coord(x)?, coord(y)?) };
            match templates.last_mut() {
                Some(t) if t.name == name => t.slots.push(slot),
                _ => {
                    if templates.iter().any(|t| t.name == name) {
                        violations.push(Violation::DuplicateFormation(name.to_owned()));
                    }
                    templates.push(FormationTemplate { name: name.to_owned(), slots: vec![slot] });
                }
            }
        }

        Ok(TemplateDocument { taxonomy, templates, violations })
    }

    /// All invariant violations, in document order.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = self.violations.clone();
        for t in &self.templates {
            out.extend(t.violations(&self.taxonomy));
        }
        if self.templates.is_empty() {
            out.push(Violation::Empty);
        }
        out
    }

    pub fn into_registry(self) -> Result<Registry> {
        if let Some(v) = self.violations().into_iter().next() {
            return Err(Error::Template(v));
        }
        let bounds = TemplateBounds::enclosing(&self.templates)?;
        Ok(Registry { taxonomy: self.taxonomy, templates: self.templates, bounds })
    }
}

/// Immutable, validated set of formation templates.
#[derive(Clone, Debug, PartialEq)]
pub struct Registry {
    taxonomy: Vec<LabelInfo>,
    templates: Vec<FormationTemplate>,
    bounds: TemplateBounds,
}

impl Registry {
    /// The bundled 65-template set, parsed once.
    pub fn bundled() -> &'static Registry {
        static BUNDLED: OnceLock<Registry> = OnceLock::new();
        BUNDLED.get_or_init(|| Registry::from_document(DEFAULT_TEMPLATES).expect("bundled templates are valid"))
    }

    pub fn from_document(text: &str) -> Result<Self> {
        TemplateDocument::parse(text)?.into_registry()
    }

    pub fn from_templates(taxonomy: Vec<LabelInfo>, templates: Vec<FormationTemplate>) -> Result<Self> {
        TemplateDocument { taxonomy, templates, violations: Vec::new() }.into_registry()
    }

    /// Serializes back into the document format; parsing the output yields an
    /// identical registry.
    pub fn to_document(&self) -> String {
        let mut out = String::new();
        for l in &self.taxonomy {
            if l.description.is_empty() {
                out.push_str(&format!("@label {}\n", l.code));
            } else {
                out.push_str(&format!("@label {} {}\n", l.code, l.description));
            }
        }
        out.push_str(HEADER);
        out.push('\n');
        for t in &self.templates {
            for s in &t.slots {
                out.push_str(&format!("{},{},{},{}\n", t.name, s.label, s.position.x, s.position.y));
            }
        }
        out
    }

    pub fn templates(&self) -> &[FormationTemplate] {
        &self.templates
    }

    pub fn taxonomy(&self) -> &[LabelInfo] {
        &self.taxonomy
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&FormationTemplate> {
        self.templates.iter().find(|t| t.name == name)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.templates.iter().position(|t| t.name == name)
    }

    /// Templates for `n` outfielders, in registry order. Empty for unsupported counts.
    pub fn filter_by_count(&self, n: usize) -> Vec<&FormationTemplate> {
        self.templates.iter().filter(|t| t.outfielder_count() == n).collect()
    }

    pub fn bounds(&self) -> TemplateBounds {
        self.bounds
    }
}

/// Summary printed by `validate-templates`.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    /// (formation, slot count) in document order.
    pub slot_counts: Vec<(String, usize)>,
    pub violations: Vec<Violation>,
    pub bounds: Option<TemplateBounds>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count_histogram(&self) -> BTreeMap<usize, usize> {
        let mut hist = BTreeMap::new();
        for (_, n) in &self.slot_counts {
            *hist.entry(*n).or_insert(0) += 1;
        }
        hist
    }
}

/// Parses `text` and collects every violation instead of stopping at the first.
pub fn validate_document(text: &str) -> Result<ValidationReport> {
    let doc = TemplateDocument::parse(text)?;
    Ok(ValidationReport {
        slot_counts: doc.templates.iter().map(|t| (t.name.clone(), t.slots.len())).collect(),
        violations: doc.violations(),
        bounds: TemplateBounds::enclosing(&doc.templates).ok(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_template(name: &str, labels: &[&str]) -> String {
        labels.iter().enumerate().map(|(i, l)| format!("{name},{l},{},{}\n", i as f64, (i % 3) as f64)).collect()
    }

    const TEN: [&str; 10] = ["LB", "LCB", "RCB", "RB", "LM", "LCM", "RCM", "RM", "LCF", "RCF"];

    #[test]
    fn bundled_has_65_templates() {
        let reg = Registry::bundled();
        assert_eq!(reg.len(), 65);
        let hist = validate_document(DEFAULT_TEMPLATES).unwrap().count_histogram();
        assert_eq!(hist.values().sum::<usize>(), 65);
        assert!(hist.keys().all(|n| OUTFIELDER_COUNTS.contains(n)));
    }

    #[test]
    fn single_template_document() {
        let doc = format!("{HEADER}\n{}", line_template("442", &TEN));
        let reg = Registry::from_document(&doc).unwrap();
        assert_eq!(reg.len(), 1);
        assert_eq!(reg.templates()[0].outfielder_count(), 10);
    }

    #[test]
    fn duplicate_label_rejected() {
        let mut labels = TEN;
        labels[2] = "LCB";
        let doc = format!("{HEADER}\n{}", line_template("442", &labels));
        let err = Registry::from_document(&doc).unwrap_err();
        assert!(matches!(err, Error::Template(Violation::DuplicateLabel { .. })), "{err}");
    }

    #[test]
    fn duplicate_formation_rejected() {
        let doc = format!(
            "{HEADER}\n{}{}{}",
            line_template("442", &TEN),
            line_template("433", &TEN),
            line_template("442", &TEN)
        );
        let err = Registry::from_document(&doc).unwrap_err();
        assert!(matches!(err, Error::Template(Violation::DuplicateFormation(ref n)) if n == "442"));
    }

    #[test]
    fn bad_slot_count_rejected() {
        let doc = format!("{HEADER}\n{}", line_template("43", &TEN[..7]));
        assert!(matches!(Registry::from_document(&doc), Err(Error::Template(Violation::SlotCount { count: 7, .. }))));
    }

    #[test]
    fn undeclared_label_rejected_when_taxonomy_present() {
        let doc = format!("@label LB Left Back\n{HEADER}\n{}", line_template("442", &TEN));
        assert!(matches!(Registry::from_document(&doc), Err(Error::Template(Violation::UnknownLabel { .. }))));
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let doc = format!("# c\n{HEADER}\n442,LB,1\n");
        assert!(matches!(TemplateDocument::parse(&doc), Err(Error::Parse { line: 3, .. })));
        let doc = format!("{HEADER}\n442,LB,1,nope\n");
        assert!(matches!(TemplateDocument::parse(&doc), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(TemplateDocument::parse("442,LB,1,2\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn empty_document_is_invalid() {
        assert!(matches!(Registry::from_document(HEADER), Err(Error::Template(Violation::Empty))));
    }

    #[test]
    fn filter_by_count() {
        let reg = Registry::bundled();
        let tens = reg.filter_by_count(10);
        assert!(tens.iter().all(|t| t.outfielder_count() == 10));
        assert!(tens.iter().any(|t| t.name() == "4411"));
        let order: Vec<usize> = tens.iter().map(|t| reg.position(t.name()).unwrap()).collect();
        assert!(order.windows(2).all(|w| w[0] < w[1]));
        assert!(reg.filter_by_count(7).is_empty());

        let doc = format!("{HEADER}\n{}", line_template("441", &TEN[..9]));
        let single = Registry::from_document(&doc).unwrap();
        assert_eq!(single.filter_by_count(9).len(), 1);
    }

    fn slot(label: &str, x: f64, y: f64) -> Slot {
        Slot { label: label.into(), position: Position::new(x, y) }
    }

    #[test]
    fn bounds_are_tight_and_monotone() {
        let mut slots: Vec<Slot> = TEN.iter().map(|l| slot(l, 5.0, 3.0)).collect();
        slots[0].position = Position::new(0.0, 0.0);
        slots[1].position = Position::new(10.0, 6.0);
        let a = FormationTemplate::new("a", slots.clone()).unwrap();
        let reg = Registry::from_templates(Vec::new(), vec![a.clone()]).unwrap();
        assert_eq!(reg.bounds(), TemplateBounds { min_x: 0.0, max_x: 10.0, min_y: 0.0, max_y: 6.0 });

        slots[2].position = Position::new(12.0, 1.0);
        let b = FormationTemplate::new("b", slots).unwrap();
        let reg = Registry::from_templates(Vec::new(), vec![a, b]).unwrap();
        assert_eq!(reg.bounds().max_x, 12.0);
        assert!(TemplateBounds::enclosing(&[]).is_err());
    }

    #[test]
    fn bundled_bounds_match_direct_scan() {
        let reg = Registry::bundled();
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for line in DEFAULT_TEMPLATES.lines() {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() == 4 && f[0] != "formation" && !line.starts_with(['#', '@']) {
                xs.push(f[2].parse::<f64>().unwrap());
                ys.push(f[3].parse::<f64>().unwrap());
            }
        }
        assert_eq!(xs.len(), reg.templates().iter().map(|t| t.outfielder_count()).sum::<usize>());
        let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
        let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let b = reg.bounds();
        assert_eq!((b.min_x, b.max_x, b.min_y, b.max_y), (min(&xs), max(&xs), min(&ys), max(&ys)));
    }

    #[test]
    fn bundled_round_trips() {
        let reg = Registry::bundled();
        assert_eq!(&Registry::from_document(&reg.to_document()).unwrap(), reg);
    }

    #[test]
    fn single_fault_injection_reports_one_violation() {
        let edited = DEFAULT_TEMPLATES.replacen("4411,RCB,", "4411,LCB,", 1);
        assert_ne!(edited, DEFAULT_TEMPLATES);
        let report = validate_document(&edited).unwrap();
        assert_eq!(report.violations.len(), 1, "{:?}", report.violations);
    }

    #[test]
    fn slot_labels_come_from_bundled_taxonomy() {
        let reg = Registry::bundled();
        assert!(!reg.taxonomy().is_empty());
        for t in reg.templates() {
            for s in t.slots() {
                assert!(reg.taxonomy().iter().any(|l| l.code == s.label));
            }
        }
    }

    mod props {
        use proptest::prelude::*;

        use super::*;

        fn registry() -> impl Strategy<Value = Registry> {
            let coord = -1.0e4f64..1.0e4;
            let template =
                (8usize..=10).prop_flat_map(move |n| proptest::collection::vec((coord.clone(), coord.clone()), n));
            proptest::collection::vec(template, 1..6).prop_map(|ts| {
                let templates = ts
                    .into_iter()
                    .enumerate()
                    .map(|(i, pts)| {
                        let slots = pts
                            .into_iter()
                            .enumerate()
                            .map(|(j, (x, y))| Slot {
                                label: PositionLabel::new(format!("P{j}")),
                                position: Position::new(x, y),
                            })
                            .collect();
                        FormationTemplate::new(format!("t{i}"), slots).unwrap()
                    })
                    .collect();
                Registry::from_templates(Vec::new(), templates).unwrap()
            })
        }

        proptest! {
            #[test]
            fn document_round_trip(reg in registry()) {
                prop_assert_eq!(Registry::from_document(&reg.to_document()).unwrap(), reg);
            }
        }
    }
}
