//! Prompt templates for every method × dataset combination.
//!
//! Template texts are frozen verbatim — downstream accuracy comparisons
//! assume the exact wording, so even whitespace is load-bearing. Rendering
//! substitutes `{placeholder}` tokens and performs no other transformation.
//! Placeholder names are case-sensitive and differ across templates
//! (`{question}` vs `{Question}`); literal braces without a name, like the
//! `\boxed{}` notation, are left untouched.
//!
//! The method templates are frozen wording — the test suite compares them
//! byte-for-byte against golden files — while the aggregation and judge
//! templates at the bottom are harness-internal and may evolve.

use std::sync::OnceLock;

use regex::Regex;

use crate::types::{Dataset, Method};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("unknown template id: {0}")]
    UnknownTemplate(String),
    #[error("missing template variable: {0}")]
    MissingVariable(String),
}

// ---------------------------------------------------------------- coding agent

const CODING_BCP: &str = r#"Answer the following question by iterating through files under folder {context_location}:

Question:
{question}

BrowseCompPlus_Corpus contains 100k files, and some of the files contain information needed to answer this question."#;

const CODING_BCP_RETRIEVER: &str = r#"Answer the following question by iterating through files under folder {context_location}:

Question:
{question}

BrowseCompPlus_Corpus contains 100k files, and some of the files contain information needed to answer this question.

Here is a retriever you may use to search for documents:

python3 retriever.py --dataset browsecomp-plus --embedding-model {embedding_model} --top-k 5 --query "your query here"

Keep in mind that there are 100k documents in the corpus. When using the retriever for your search, carefully format your query to be multi-faceted."#;

const CODING_LONGBENCH: &str = r#"Answer the question below using text from file {context_location}

Question:
{Question}

Choices:
(A) {Choice_A}
(B) {Choice_B}
(C) {Choice_C}
(D) {Choice_D}

Choose only one option.

Format your response as follows: "The correct answer is (insert answer here)"."#;

const CODING_LONGBENCH_RETRIEVER: &str = r#"Answer the question using text from file {context_location}

You may use the following retriever to find top-k representative chunks (each chunk has 300 words) from the txt file:

python retriever.py --dataset longbench --embedding-model {embedding_model} --query "your query here" --top-k 5 --datapoint-id {LongBench_datapoint_id}

You should identify important keywords to formulate a strong query. You can form an initial query, analyze the retrieved chunks, and then iteratively refine your query by adding, removing, or changing terms based on the results to find the most relevant context.

If the retrieved chunks do not give a clear answer to the question, you must refine your query and find another set of chunks. Keep doing this until you are confident that you find the answer to the query.

What is the correct answer to this question:
{Question}

Choices:
(A) {Choice_A}
(B) {Choice_B}
(C) {Choice_C}
(D) {Choice_D}

Choose only one option.

Format your response as follows: "The correct answer is (insert answer here)"."#;

const CODING_NQ: &str = r#"Answer the following question by iterating through the corpus {context_location}

Question:
{question}

Answer the question based on the given document. Only give me the answer and do not output any other words."#;

const CODING_NQ_RETRIEVER: &str = r#"Answer the following question by iterating through the corpus {context_location}

Question:
{question}

You may use the following retriever to search for documents:

python3 retriever.py --dataset nq --embedding-model {embedding_model} --top-k 5 --query "your query here"

Answer the question based on the given document. Only give me the answer and do not output any other words."#;

const CODING_OOLONG_REAL: &str = r#"Answer the following question using text from file
{context_location}

The description of the txt file is included at the start of the file.

Question: {question}"#;

const CODING_OOLONG_REAL_RETRIEVER: &str = r#"Answer the following question using text from file
{context_location}

The description of the txt file is included at the start of the file.

Question: {question}

You may use the following retriever to find top-k representative chunks (each chunk has 300 words) from the txt file:

python retriever.py --dataset oolong_real --embedding-model {embedding_model} --query "your query here" --top-k 5 --datapoint-id {oolong_datapoint_id}"#;

const CODING_OOLONG_SYNTHETIC: &str = r#"Answer the following question using text from file
{context_location}

The description of the txt file is included at the start of the file.

Question: {question}

Note: Labels are not provided, you should determine label by yourself."#;

const CODING_OOLONG_SYNTHETIC_RETRIEVER: &str = r#"Answer the following question using text from file
{context_location}

The description of the txt file is included at the start of the file.

Question: {question}

Note: Labels are not provided, you should determine label by yourself.

You may use the following retriever to find top-k representative chunks (each chunk has 300 words) from the txt file:

python retriever.py --dataset oolong_synthetic --embedding-model {embedding_model} --query "your query here" --top-k 5 --datapoint-id {oolong_datapoint_id}"#;

// ---------------------------------------------------------------------- react

const REACT_BCP: &str = r#"Answer the given question by interacting with a retriever, using the retriever and get_document tools provided. Please perform reasoning and use the tools step by step, in an interleaved manner. You may use the retriever and get_document tools multiple times.

Question: {Question}

BrowseCompPlus_Corpus contains 100k files, and some of the files contain information needed to answer this question."#;

const REACT_LONGBENCH: &str = r#"Answer the given question by interacting with a retriever, using the retriever and get_document tools provided. Please perform reasoning and use the tools step by step, in an interleaved manner. You may use the retriever and get_document tools multiple times.

Question: {Question}

Choices:
(A) {Choice_A}
(B) {Choice_B}
(C) {Choice_C}
(D) {Choice_D}

Choose only one option.

Format your response as follows: "The correct answer is (insert answer here)"."#;

const REACT_NQ: &str = r#"Answer the given question by interacting with a retriever, using the retriever and get_document tools provided. Please perform reasoning and use the tools step by step, in an interleaved manner. You may use the retriever and get_document tools multiple times.

Question: {Question}

Only give me the answer and do not output any other words."#;

const REACT_OOLONG_REAL: &str = r#"Answer the given question by interacting with a retriever, using the retriever tools provided. Please perform reasoning and use the tools step by step, in an interleaved manner. You may use the retriever and get_document tools multiple times.

Question: {Question}

Do not try to guess, estimate or approximate the result. Do not ask the user for clarification or follow-up. Do step-by-step reasoning if needed. Return the final answer in \boxed{}."#;

const REACT_OOLONG_SYNTHETIC: &str = r#"Answer the given question by interacting with a retriever, using the retriever tools provided. Please perform reasoning and use the tools step by step, in an interleaved manner. You may use the retriever and get_document tools multiple times.

Question: {Question}

Do not try to guess, estimate, or approximate the result. Calculate the exact answer given these datapoints."#;

// --------------------------------------------------------------- full context

const FULL_CONTEXT_BCP: &str = r#"Answer the following question based on the provided context.

Question: {Question}

Context: {Context}"#;

const FULL_CONTEXT_LONGBENCH: &str = r#"Answer the following question based on the provided context.

Question: {Question}

Choices:
(A) {Choice_A}
(B) {Choice_B}
(C) {Choice_C}
(D) {Choice_D}

Context: {Context}

Choose only one option.

Format your answer as follows: "The correct answer is (insert answer here)"."#;

const FULL_CONTEXT_NQ: &str = r#"Answer the following question based on the provided context.

Question: {Question}

Context: {Context}

Only give me the answer and do not output any other words."#;

const FULL_CONTEXT_OOLONG_REAL: &str = r#"Answer the following question based on the provided context.

Question: {Question}

Context: {Context}"#;

const FULL_CONTEXT_OOLONG_SYNTHETIC: &str = r#"Answer the following question based on the provided context.

Question: {Question}

Context: {Context}"#;

// ----------------------------------------------- repo-owned: window aggregation

const AGGREGATE_DEFAULT: &str = r#"You previously answered the same question over overlapping windows of a longer context. Here are the per-window answers and reasoning:

{window_answers}

Based on these per-window answers, give a single final answer to the original question.

Question: {Question}"#;

const AGGREGATE_LONGBENCH: &str = r#"You previously answered the same question over overlapping windows of a longer context. Here are the per-window answers and reasoning:

{window_answers}

Based on these per-window answers, give a single final answer to the original question.

Question: {Question}

Choices:
(A) {Choice_A}
(B) {Choice_B}
(C) {Choice_C}
(D) {Choice_D}

Choose only one option.

Format your answer as follows: "The correct answer is (insert answer here)"."#;

const AGGREGATE_NQ: &str = r#"You previously answered the same question over overlapping windows of a longer context. Here are the per-window answers and reasoning:

{window_answers}

Based on these per-window answers, give a single final answer to the original question.

Question: {Question}

Only give me the answer and do not output any other words."#;

// ------------------------------------------------------- repo-owned: LLM judge

const JUDGE_DEFAULT: &str = r#"You are grading a proposed answer to a question against a gold reference answer.

Question: {Question}

Gold answer: {Gold}

Proposed answer: {Prediction}

Does the proposed answer convey the same answer as the gold reference? Respond with exactly one word: correct or incorrect."#;

/// Every template id, stable and enumerable for golden-file tests.
pub fn template_ids() -> Vec<&'static str> {
    vec![
        "coding/browsecomp-plus",
        "coding/browsecomp-plus+retriever",
        "coding/longbench",
        "coding/longbench+retriever",
        "coding/nq",
        "coding/nq+retriever",
        "coding/oolong_real",
        "coding/oolong_real+retriever",
        "coding/oolong_synthetic",
        "coding/oolong_synthetic+retriever",
        "react/browsecomp-plus",
        "react/longbench",
        "react/nq",
        "react/oolong_real",
        "react/oolong_synthetic",
        "full_context/browsecomp-plus",
        "full_context/longbench",
        "full_context/nq",
        "full_context/oolong_real",
        "full_context/oolong_synthetic",
        "aggregate/default",
        "aggregate/longbench",
        "aggregate/nq",
        "judge/default",
    ]
}

/// Raw template text by id.
pub fn template_text(id: &str) -> Result<&'static str, PromptError> {
    Ok(match id {
        "coding/browsecomp-plus" => CODING_BCP,
        "coding/browsecomp-plus+retriever" => CODING_BCP_RETRIEVER,
        "coding/longbench" => CODING_LONGBENCH,
        "coding/longbench+retriever" => CODING_LONGBENCH_RETRIEVER,
        "coding/nq" => CODING_NQ,
        "coding/nq+retriever" => CODING_NQ_RETRIEVER,
        "coding/oolong_real" => CODING_OOLONG_REAL,
        "coding/oolong_real+retriever" => CODING_OOLONG_REAL_RETRIEVER,
        "coding/oolong_synthetic" => CODING_OOLONG_SYNTHETIC,
        "coding/oolong_synthetic+retriever" => CODING_OOLONG_SYNTHETIC_RETRIEVER,
        "react/browsecomp-plus" => REACT_BCP,
        "react/longbench" => REACT_LONGBENCH,
        "react/nq" => REACT_NQ,
        "react/oolong_real" => REACT_OOLONG_REAL,
        "react/oolong_synthetic" => REACT_OOLONG_SYNTHETIC,
        "full_context/browsecomp-plus" => FULL_CONTEXT_BCP,
        "full_context/longbench" => FULL_CONTEXT_LONGBENCH,
        "full_context/nq" => FULL_CONTEXT_NQ,
        "full_context/oolong_real" => FULL_CONTEXT_OOLONG_REAL,
        "full_context/oolong_synthetic" => FULL_CONTEXT_OOLONG_SYNTHETIC,
        "aggregate/default" => AGGREGATE_DEFAULT,
        "aggregate/longbench" => AGGREGATE_LONGBENCH,
        "aggregate/nq" => AGGREGATE_NQ,
        "judge/default" => JUDGE_DEFAULT,
        _ => return Err(PromptError::UnknownTemplate(id.to_string())),
    })
}

/// Template id for a coding-agent run.
pub fn coding_template_id(dataset: Dataset, with_retriever: bool) -> String {
    if with_retriever {
        format!("coding/{}+retriever", dataset.id())
    } else {
        format!("coding/{}", dataset.id())
    }
}

/// Template id for a given (method, dataset); coding-agent callers should use
/// [`coding_template_id`] to select the retriever variant.
pub fn method_template_id(method: Method, dataset: Dataset) -> String {
    format!("{}/{}", method.id(), dataset.id())
}

/// Aggregation template id for a dataset (multiple-choice and short-answer
/// datasets repeat their format instructions).
pub fn aggregate_template_id(dataset: Dataset) -> &'static str {
    match dataset {
        Dataset::LongBench => "aggregate/longbench",
        Dataset::Nq => "aggregate/nq",
        _ => "aggregate/default",
    }
}

fn placeholder_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    // `{}` (no name) is not a placeholder; see the \boxed{} notation.
    RE.get_or_init(|| Regex::new(r"\{([A-Za-z_][A-Za-z0-9_]*)\}").unwrap())
}

/// Placeholder names appearing in a template, in order of first appearance.
pub fn placeholders(template: &str) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for cap in placeholder_re().captures_iter(template) {
        let name = cap[1].to_string();
        if seen.insert(name.clone()) {
            out.push(name);
        }
    }
    out
}

/// Substitute `{name}` placeholders in `template` from `vars`.
///
/// Single pass over the template: substituted values are inserted verbatim
/// and never re-scanned, so a question containing `{context_location}` cannot
/// inject a second substitution.
pub fn render_str(
    template: &str,
    vars: &std::collections::HashMap<String, String>,
) -> Result<String, PromptError> {
    let re = placeholder_re();
    let mut out = String::with_capacity(template.len());
    let mut last = 0;
    for cap in re.captures_iter(template) {
        let m = cap.get(0).unwrap();
        let name = &cap[1];
        let value = vars
            .get(name)
            .ok_or_else(|| PromptError::MissingVariable(name.to_string()))?;
        out.push_str(&template[last..m.start()]);
        out.push_str(value);
        last = m.end();
    }
    out.push_str(&template[last..]);
    Ok(out)
}

/// Look up a template by id and render it.
pub fn render_prompt(
    template_id: &str,
    vars: &std::collections::HashMap<String, String>,
) -> Result<String, PromptError> {
    render_str(template_text(template_id)?, vars)
}
