use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::process::{Command, Stdio};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::CorpusRecord;
use crate::dsl::{
    canonicalize, extract_yaml_block, parse_topology, validate_logic, DslConfig, TopologyDoc, ValidationError,
    YamlErrorClass,
};
use crate::graph::{decode_topo, density_scores};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    Syntax,
    Schema,
    Logic,
    Duplicate,
    DensityBand,
    External,
}

impl RejectReason {
    pub const ALL: [RejectReason; 6] = [
        RejectReason::Syntax,
        RejectReason::Schema,
        RejectReason::Logic,
        RejectReason::Duplicate,
        RejectReason::DensityBand,
        RejectReason::External,
    ];
}

/// Optional `s_complex` range, inclusive at both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityBand {
    pub min: f64,
    pub max: f64,
}

/// Extra check run on records that passed every built-in stage.
pub trait RecordValidator: Send + Sync {
    fn check(&self, record: &CorpusRecord) -> Result<(), String>;
}

/// Pipes the record as JSON into a command; a non-zero exit rejects it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommandValidator {
    pub program: String,
    #[serde(default)]
    pub args: Vec<String>,
}

impl RecordValidator for CommandValidator {
    fn check(&self, record: &CorpusRecord) -> Result<(), String> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::null())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| format!("spawning `{}`: {e}", self.program))?;
        let payload = serde_json::to_vec(record).map_err(|e| e.to_string())?;
        if let Some(mut stdin) = child.stdin.take() {
            // a validator may exit before reading everything
            let _ = stdin.write_all(&payload);
        }
        let out = child.wait_with_output().map_err(|e| e.to_string())?;
        if out.status.success() {
            Ok(())
        } else {
            let stderr = String::from_utf8_lossy(&out.stderr);
            Err(format!("validator exited with {}: {}", out.status, stderr.trim()))
        }
    }
}

#[derive(Default)]
pub struct FilterConfig {
    pub dsl: DslConfig,
    pub complexity_band: Option<ComplexityBand>,
    pub validator: Option<Box<dyn RecordValidator>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordOutcome {
    pub id: String,
    pub accepted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<RejectReason>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub total: usize,
    pub accepted: usize,
    /// Every reason is listed, including those with a zero count.
    pub rejected: BTreeMap<RejectReason, usize>,
    pub outcomes: Vec<RecordOutcome>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FilterOutput {
    pub report: FilterReport,
    pub accepted: Vec<CorpusRecord>,
}

type Verdict = Result<(), (RejectReason, String)>;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mark {
    Todo,
    Busy,
    Done,
}

struct Pipeline<'a> {
    records: &'a [CorpusRecord],
    config: &'a FilterConfig,
    by_id: HashMap<&'a str, usize>,
    docs: Vec<Result<TopologyDoc, ValidationError>>,
    keys: Vec<Option<Vec<u8>>>,
    groups: HashMap<Vec<u8>, Vec<usize>>,
    logic: Vec<Option<Verdict>>,
    marks: Vec<Mark>,
    finals: Vec<Option<Verdict>>,
}

/// Runs syntax, schema, logic, duplicate, density-band and optional extra
/// checks; each record is rejected by the first stage it fails.
///
/// A record with a `prior_id` passes the logic stage only if the prior
/// record is itself accepted and the refs resolve against its agent ids.
/// Among records with the same canonical topology that pass the logic
/// stage, the first in input order survives.
pub fn filter_corpus(records: &[CorpusRecord], config: &FilterConfig) -> FilterOutput {
    let docs: Vec<_> = records.par_iter().map(|r| parse_record(r, &config.dsl)).collect();
    let keys: Vec<_> = docs
        .par_iter()
        .map(|d| d.as_ref().ok().map(canonicalize))
        .collect();
    let mut groups: HashMap<Vec<u8>, Vec<usize>> = HashMap::new();
    for (i, key) in keys.iter().enumerate() {
        if let Some(k) = key {
            groups.entry(k.clone()).or_default().push(i);
        }
    }
    let mut by_id = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        by_id.entry(r.id.as_str()).or_insert(i);
    }

    let n = records.len();
    let mut pipeline = Pipeline {
        records,
        config,
        by_id,
        docs,
        keys,
        groups,
        logic: vec![None; n],
        marks: vec![Mark::Todo; n],
        finals: vec![None; n],
    };
    let verdicts: Vec<Verdict> = (0..n).map(|i| pipeline.verdict(i)).collect();

    let mut rejected: BTreeMap<RejectReason, usize> = RejectReason::ALL.iter().map(|&r| (r, 0)).collect();
    let mut outcomes = Vec::with_capacity(n);
    let mut accepted = Vec::new();
    for (record, verdict) in records.iter().zip(verdicts) {
        match verdict {
            Ok(()) => {
                accepted.push(record.clone());
                outcomes.push(RecordOutcome {
                    id: record.id.clone(),
                    accepted: true,
                    reason: None,
                    detail: None,
                });
            }
            Err((reason, detail)) => {
                *rejected.get_mut(&reason).expect("all reasons seeded") += 1;
                outcomes.push(RecordOutcome {
                    id: record.id.clone(),
                    accepted: false,
                    reason: Some(reason),
                    detail: Some(detail),
                });
            }
        }
    }

    FilterOutput {
        report: FilterReport {
            total: n,
            accepted: accepted.len(),
            rejected,
            outcomes,
        },
        accepted,
    }
}

pub(super) fn parse_record(record: &CorpusRecord, dsl: &DslConfig) -> Result<TopologyDoc, ValidationError> {
    let yaml = if record.yaml.contains("```") {
        extract_yaml_block(&record.yaml)?
    } else {
        record.yaml.as_str()
    };
    let mut cfg = dsl.clone();
    cfg.difficulty_fallback = Some(record.difficulty);
    parse_topology(yaml, &cfg)
}

fn stage_of(class: YamlErrorClass) -> RejectReason {
    match class {
        YamlErrorClass::NoYamlFound | YamlErrorClass::ParseError => RejectReason::Syntax,
        YamlErrorClass::SchemaInvalid => RejectReason::Schema,
        YamlErrorClass::LogicInvalid => RejectReason::Logic,
    }
}

impl Pipeline<'_> {
    fn verdict(&mut self, i: usize) -> Verdict {
        if let Some(v) = &self.finals[i] {
            return v.clone();
        }
        if self.marks[i] == Mark::Busy {
            return Err((RejectReason::Logic, "cyclic prior-turn references".into()));
        }
        self.marks[i] = Mark::Busy;
        let v = self.evaluate(i);
        self.marks[i] = Mark::Done;
        self.finals[i] = Some(v.clone());
        v
    }

    fn evaluate(&mut self, i: usize) -> Verdict {
        self.passes_logic(i)?;

        let key = self.keys[i].clone().expect("parsed records have a key");
        let earlier: Vec<usize> = self.groups[&key].iter().copied().take_while(|&j| j < i).collect();
        for j in earlier {
            if self.passes_logic(j).is_ok() {
                return Err((
                    RejectReason::Duplicate,
                    format!("same canonical topology as `{}`", self.records[j].id),
                ));
            }
        }

        let record = &self.records[i];
        let doc = self.docs[i].as_ref().expect("checked above");
        let report = density_scores(&decode_topo(doc, None), record.difficulty);
        if !report.within_node_cap() {
            return Err((
                RejectReason::DensityBand,
                format!(
                    "{} nodes exceed the cap of {} for difficulty {}",
                    report.v_count, report.n_max, record.difficulty
                ),
            ));
        }
        if let Some(band) = self.config.complexity_band {
            if !(band.min..=band.max).contains(&report.s_complex) {
                return Err((
                    RejectReason::DensityBand,
                    format!("s_complex {} outside [{}, {}]", report.s_complex, band.min, band.max),
                ));
            }
        }
        if let Some(validator) = &self.config.validator {
            validator.check(record).map_err(|e| (RejectReason::External, e))?;
        }
        Ok(())
    }

    fn passes_logic(&mut self, i: usize) -> Verdict {
        if let Some(v) = &self.logic[i] {
            return v.clone();
        }
        let v = self.check_logic(i);
        self.logic[i] = Some(v.clone());
        v
    }

    fn check_logic(&mut self, i: usize) -> Verdict {
        let doc = match &self.docs[i] {
            Ok(doc) => doc.clone(),
            Err(e) => return Err((stage_of(e.class), e.detail.clone())),
        };
        let prior_ids = match &self.records[i].prior_id {
            None => Default::default(),
            Some(pid) => {
                let Some(&j) = self.by_id.get(pid.as_str()) else {
                    return Err((RejectReason::Logic, format!("prior record `{pid}` not found")));
                };
                if j == i {
                    return Err((RejectReason::Logic, "record names itself as its prior".into()));
                }
                if let Err((reason, _)) = self.verdict(j) {
                    return Err((
                        RejectReason::Logic,
                        format!("prior record `{pid}` was rejected ({reason:?})"),
                    ));
                }
                self.docs[j].as_ref().expect("accepted").agent_ids()
            }
        };
        validate_logic(&doc, &prior_ids, &self.config.dsl.roles).map_err(|e| (RejectReason::Logic, e.detail))
    }
}
