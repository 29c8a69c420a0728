//! Two-player signaling game between a student and an employer.
//!
//! The student decides whether to study, then answers the employer's question
//! "did you study?". The employer sees only the answer and decides whether to
//! hire.

use serde::{Deserialize, Serialize};

use crate::efg::{Action, GameType, InfoSetId, PlayerId, SuccinctGame};

pub const STUDENT: usize = 0;
pub const EMPLOYER: usize = 1;

/// Student's first decision: 0 = study, 1 = skip.
pub const STUDY: InfoSetId = 0;
/// Student's answer after studying: 0 = "yes", 1 = "no".
pub const ANSWER_AFTER_STUDY: InfoSetId = 1;
/// Student's answer after skipping.
pub const ANSWER_AFTER_SKIP: InfoSetId = 2;
/// Employer after hearing "yes": 0 = hire, 1 = reject.
pub const HEARD_YES: InfoSetId = 3;
/// Employer after hearing "no".
pub const HEARD_NO: InfoSetId = 4;

pub const DO_STUDY: Action = 0;
pub const SKIP: Action = 1;
pub const SAY_YES: Action = 0;
pub const SAY_NO: Action = 1;
pub const HIRE: Action = 0;
pub const REJECT: Action = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobMarketSpec {
    pub hire_benefit: f64,
    pub study_cost: f64,
    pub employer_good_hire: f64,
    pub employer_bad_hire: f64,
}

impl Default for JobMarketSpec {
    fn default() -> Self {
        Self {
            hire_benefit: 5.0,
            study_cost: 1.0,
            employer_good_hire: 5.0,
            employer_bad_hire: -5.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum JobMarketNode {
    Start,
    Answering { studied: bool },
    Deciding { studied: bool, said_yes: bool },
    Done { studied: bool, hired: bool },
}

#[derive(Clone, Debug)]
pub struct JobMarket {
    spec: JobMarketSpec,
    r_max: f64,
}

pub fn build_job_market(spec: JobMarketSpec) -> JobMarket {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for studied in [false, true] {
        for hired in [false, true] {
            let u = leaf_utility(&spec, studied, hired);
            for n in 0..2 {
                lo[n] = lo[n].min(u[n]);
                hi[n] = hi[n].max(u[n]);
            }
        }
    }
    let r_max = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    JobMarket { spec, r_max }
}

fn leaf_utility(spec: &JobMarketSpec, studied: bool, hired: bool) -> Vec<f64> {
    let student = if hired { spec.hire_benefit } else { 0.0 } - if studied { spec.study_cost } else { 0.0 };
    let employer = match (hired, studied) {
        (true, true) => spec.employer_good_hire,
        (true, false) => spec.employer_bad_hire,
        (false, _) => 0.0,
    };
    vec![student, employer]
}

impl JobMarket {
    pub fn spec(&self) -> &JobMarketSpec {
        &self.spec
    }

    pub fn leaf(&self, studied: bool, hired: bool) -> JobMarketNode {
        JobMarketNode::Done { studied, hired }
    }
}

impl SuccinctGame for JobMarket {
    type Node = JobMarketNode;

    fn game_type(&self) -> GameType {
        GameType { gamma: 10, r_max: self.r_max }
    }

    fn num_players(&self) -> usize {
        2
    }

    fn root(&self) -> JobMarketNode {
        JobMarketNode::Start
    }

    fn info_set(&self, node: &JobMarketNode) -> Option<InfoSetId> {
        match *node {
            JobMarketNode::Start => Some(STUDY),
            JobMarketNode::Answering { studied: true } => Some(ANSWER_AFTER_STUDY),
            JobMarketNode::Answering { studied: false } => Some(ANSWER_AFTER_SKIP),
            JobMarketNode::Deciding { said_yes: true, .. } => Some(HEARD_YES),
            JobMarketNode::Deciding { said_yes: false, .. } => Some(HEARD_NO),
            JobMarketNode::Done { .. } => None,
        }
    }

    fn player(&self, info_set: InfoSetId) -> PlayerId {
        match info_set {
            STUDY | ANSWER_AFTER_STUDY | ANSWER_AFTER_SKIP => PlayerId::Regular(STUDENT),
            _ => PlayerId::Regular(EMPLOYER),
        }
    }

    fn num_actions(&self, _info_set: InfoSetId) -> usize {
        2
    }

    fn next(&self, node: &JobMarketNode, action: Action) -> JobMarketNode {
        debug_assert!(action < 2);
        match *node {
            JobMarketNode::Start => JobMarketNode::Answering {
                studied: action == DO_STUDY,
            },
            JobMarketNode::Answering { studied } => JobMarketNode::Deciding {
                studied,
                said_yes: action == SAY_YES,
            },
            JobMarketNode::Deciding { studied, .. } => JobMarketNode::Done {
                studied,
                hired: action == HIRE,
            },
            JobMarketNode::Done { .. } => panic!("next() called at a leaf"),
        }
    }

    fn nature_probability(&self, _info_set: InfoSetId, _action: Action) -> f64 {
        panic!("the job market game has no nature moves")
    }

    fn utility(&self, leaf: &JobMarketNode) -> Vec<f64> {
        match *leaf {
            JobMarketNode::Done { studied, hired } => leaf_utility(&self.spec, studied, hired),
            _ => panic!("utility() called at an internal node"),
        }
    }

    fn nature_info_set_count(&self) -> Option<u64> {
        Some(0)
    }

    fn precedes(&self, from: InfoSetId, to: InfoSetId) -> Option<bool> {
        Some(from == STUDY && (to == ANSWER_AFTER_STUDY || to == ANSWER_AFTER_SKIP))
    }

    fn name(&self) -> String {
        "jobmarket".into()
    }

    fn parameters(&self) -> serde_json::Value {
        serde_json::to_value(self.spec).unwrap_or_default()
    }
}
