//! Answer scoring under each benchmark's protocol, plus evaluation sampling.
//!
//! Four scorers cover the benchmarks: normalized exact match for open-domain
//! QA, multiple-choice letter extraction, exact/numeric scoring for
//! aggregation questions (numeric distance decays as 0.75^|y−ŷ|), and an
//! LLM judge for free-form web questions. Benchmarks are evaluated on a
//! seeded 200-question sample persisted to disk so every method sees the
//! identical subset.

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::gateway::types::{ChatMessage, ChatRequest};
use crate::gateway::{Gateway, GatewayError};
use crate::prompts;
use crate::types::{Dataset, GoldAnswer, Question};

/// Default evaluation sample size per benchmark.
pub const DEFAULT_SAMPLE_N: usize = 200;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("no multiple-choice letter found in response")]
    NoChoiceFound,
    #[error("judge verdict unparseable after reprompt")]
    UnparseableVerdict,
    #[error("sample of {requested} exceeds population of {available}")]
    SampleTooLarge { requested: usize, available: usize },
    #[error("scoring {dataset} requires a judge model and gateway")]
    JudgeUnavailable { dataset: Dataset },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Which protocol produced a score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scorer {
    Em,
    Mcq,
    OolongExact,
    OolongNumeric,
    LlmJudge,
}

/// One scored answer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalOutcome {
    pub question_id: String,
    pub score: f64,
    pub scorer: Scorer,
    /// Anomaly marker (`no-choice-found`, `numeric-parse-failure`,
    /// `unparseable-verdict`) — the score is still final.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<String>,
}

// ------------------------------------------------------------- normalization

fn article_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b(a|an|the)\b").unwrap())
}

/// Open-domain QA answer normalization: lowercase, strip ASCII punctuation,
/// drop standalone articles, collapse whitespace.
pub fn normalize_answer(text: &str) -> String {
    let lower = text.to_lowercase();
    let no_punct: String = lower.chars().filter(|c| !c.is_ascii_punctuation()).collect();
    let no_articles = article_re().replace_all(&no_punct, " ");
    no_articles.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// 1 iff the normalized prediction equals any normalized gold.
pub fn exact_match(pred: &str, golds: &[String]) -> f64 {
    let pred = normalize_answer(pred);
    if golds.iter().any(|g| normalize_answer(g) == pred) {
        1.0
    } else {
        0.0
    }
}

// ------------------------------------------------------------------ MCQ

fn mcq_phrase_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)the correct answer is\s*:?\s*\(?\s*([A-D])\b\)?").unwrap())
}

/// Extract the chosen letter from a multiple-choice response.
///
/// Takes the last `The correct answer is (X)` occurrence (parenthesized or
/// bare); if the phrase never appears, falls back to a lone A–D token at the
/// end of the text.
pub fn extract_mcq_choice(response: &str) -> Result<char, EvalError> {
    if let Some(cap) = mcq_phrase_re().captures_iter(response).last() {
        return Ok(cap[1].chars().next().unwrap().to_ascii_uppercase());
    }
    let trimmed = response.trim_end();
    if let Some(last_token) = trimmed.split_whitespace().next_back() {
        let bare: String = last_token
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect();
        if bare.len() == 1 {
            let c = bare.chars().next().unwrap().to_ascii_uppercase();
            if ('A'..='D').contains(&c) {
                return Ok(c);
            }
        }
    }
    Err(EvalError::NoChoiceFound)
}

// ------------------------------------------------------------------ oolong

/// Score an aggregation-benchmark answer.
///
/// Numeric golds decay exponentially with distance: `0.75^|y−ŷ|`; an
/// unparseable prediction scores 0 with a `numeric-parse-failure` flag.
/// Every other gold kind is exact match after trimming and case-folding.
pub fn oolong_score(gold: &GoldAnswer, pred: &str) -> (f64, Option<String>) {
    match gold {
        GoldAnswer::Numeric { value } => match parse_numeric(pred) {
            Some(got) => (0.75f64.powf((value - got).abs()), None),
            None => (0.0, Some("numeric-parse-failure".to_string())),
        },
        GoldAnswer::Label { value } => (casefold_eq(pred, value), None),
        GoldAnswer::Freeform { values } => {
            let hit = values.iter().any(|v| casefold_eq(pred, v) == 1.0);
            (if hit { 1.0 } else { 0.0 }, None)
        }
        GoldAnswer::McqLetter { letter } => (casefold_eq(pred, &letter.to_string()), None),
    }
}

fn casefold_eq(a: &str, b: &str) -> f64 {
    if a.trim().to_lowercase() == b.trim().to_lowercase() {
        1.0
    } else {
        0.0
    }
}

/// Pull a number out of a prediction, tolerating `\boxed{…}` wrappers,
/// thousands separators, and a trailing period.
fn parse_numeric(pred: &str) -> Option<f64> {
    let mut s = pred.trim();
    if let Some(rest) = s.strip_prefix(r"\boxed{") {
        s = rest.strip_suffix('}').unwrap_or(rest);
    }
    let s = s.trim().trim_end_matches('.').replace(',', "");
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

// --------------------------------------------------------------- LLM judge

/// Judge a free-form answer with one chat call, reprompting once if the
/// verdict token is missing; a second failure scores 0 with a flag.
pub fn llm_judge(
    question: &Question,
    pred: &str,
    gateway: &Gateway,
    judge_model: &str,
) -> Result<EvalOutcome, EvalError> {
    let gold_display = match &question.gold {
        GoldAnswer::Freeform { values } => values.join(" | "),
        GoldAnswer::Label { value } => value.clone(),
        GoldAnswer::Numeric { value } => value.to_string(),
        GoldAnswer::McqLetter { letter } => letter.to_string(),
    };
    let vars: std::collections::HashMap<String, String> = [
        ("Question".to_string(), question.text.clone()),
        ("Gold".to_string(), gold_display),
        ("Prediction".to_string(), pred.to_string()),
    ]
    .into_iter()
    .collect();
    let prompt = prompts::render_prompt("judge/default", &vars)
        .expect("judge template variables are fixed");
    let mut messages = vec![ChatMessage::user(prompt)];
    for attempt in 0..2 {
        let resp = gateway.chat(&ChatRequest::new(judge_model, messages.clone()))?;
        match parse_verdict(&resp.text) {
            Some(score) => {
                return Ok(EvalOutcome {
                    question_id: question.id.clone(),
                    score,
                    scorer: Scorer::LlmJudge,
                    flag: None,
                })
            }
            None if attempt == 0 => {
                messages.push(ChatMessage::assistant(resp.text));
                messages.push(ChatMessage::user(
                    "Respond with exactly one word: correct or incorrect.",
                ));
            }
            None => {}
        }
    }
    Ok(EvalOutcome {
        question_id: question.id.clone(),
        score: 0.0,
        scorer: Scorer::LlmJudge,
        flag: Some("unparseable-verdict".to_string()),
    })
}

/// `incorrect` must be checked before `correct` — the former contains the
/// latter as a substring.
fn parse_verdict(text: &str) -> Option<f64> {
    let lower = text.to_lowercase();
    if lower.contains("incorrect") {
        Some(0.0)
    } else if lower.contains("correct") {
        Some(1.0)
    } else {
        None
    }
}

// ------------------------------------------------------------------ routing

/// Score one answer under its dataset's protocol. A judge gateway is
/// required only for datasets scored by LLM judge.
pub fn score_question(
    question: &Question,
    answer: &str,
    judge: Option<(&Gateway, &str)>,
) -> Result<EvalOutcome, EvalError> {
    match question.dataset {
        Dataset::Nq => {
            let golds = match &question.gold {
                GoldAnswer::Freeform { values } => values.clone(),
                GoldAnswer::Label { value } => vec![value.clone()],
                other => vec![format!("{other:?}")],
            };
            Ok(EvalOutcome {
                question_id: question.id.clone(),
                score: exact_match(answer, &golds),
                scorer: Scorer::Em,
                flag: None,
            })
        }
        Dataset::LongBench => {
            let gold_letter = match &question.gold {
                GoldAnswer::McqLetter { letter } => *letter,
                _ => {
                    return Ok(EvalOutcome {
                        question_id: question.id.clone(),
                        score: 0.0,
                        scorer: Scorer::Mcq,
                        flag: Some("gold-not-mcq".to_string()),
                    })
                }
            };
            match extract_mcq_choice(answer) {
                Ok(letter) => Ok(EvalOutcome {
                    question_id: question.id.clone(),
                    score: if letter == gold_letter { 1.0 } else { 0.0 },
                    scorer: Scorer::Mcq,
                    flag: None,
                }),
                Err(EvalError::NoChoiceFound) => Ok(EvalOutcome {
                    question_id: question.id.clone(),
                    score: 0.0,
                    scorer: Scorer::Mcq,
                    flag: Some("no-choice-found".to_string()),
                }),
                Err(e) => Err(e),
            }
        }
        Dataset::OolongReal | Dataset::OolongSynthetic => {
            let scorer = match question.gold {
                GoldAnswer::Numeric { .. } => Scorer::OolongNumeric,
                _ => Scorer::OolongExact,
            };
            let (score, flag) = oolong_score(&question.gold, answer);
            Ok(EvalOutcome {
                question_id: question.id.clone(),
                score,
                scorer,
                flag,
            })
        }
        Dataset::BrowseCompPlus => {
            let (gateway, model) = judge.ok_or(EvalError::JudgeUnavailable {
                dataset: question.dataset,
            })?;
            llm_judge(question, answer, gateway, model)
        }
    }
}

// ----------------------------------------------------------------- sampling

/// Persisted benchmark sample: the exact question subset every method runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleFile {
    pub dataset: Dataset,
    pub seed: u64,
    pub n: usize,
    pub question_ids: Vec<String>,
}

impl SampleFile {
    /// `<dir>/<dataset>.sample.<seed>.json`
    pub fn path(dir: &Path, dataset: Dataset, seed: u64) -> PathBuf {
        dir.join(format!("{}.sample.{seed}.json", dataset.id()))
    }

    pub fn save(&self, dir: &Path) -> Result<PathBuf, EvalError> {
        std::fs::create_dir_all(dir)?;
        let path = Self::path(dir, self.dataset, self.seed);
        std::fs::write(&path, serde_json::to_string_pretty(self)?)?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Seeded uniform sample of question ids without replacement.
///
/// Partial Fisher–Yates over the index keeps the result a function of only
/// (ids, n, seed), independent of library shuffle internals.
pub fn sample_benchmark(ids: &[String], n: usize, seed: u64) -> Result<Vec<String>, EvalError> {
    if n > ids.len() {
        return Err(EvalError::SampleTooLarge {
            requested: n,
            available: ids.len(),
        });
    }
    let mut index: Vec<usize> = (0..ids.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..n {
        let j = rng.gen_range(i..index.len());
        index.swap(i, j);
    }
    Ok(index[..n].iter().map(|&i| ids[i].clone()).collect())
}
