//! Prompt templates and tolerant JSON extraction from model output.

use serde_json::Value;

/// Joint chunking and coreference-resolution prompt, verbatim.
pub const CHUNKING_TEMPLATE: &str = include_str!("../../assets/chunking_prompt.txt");
/// Pseudo-query generation prompt, verbatim.
pub const PSEUDO_QUERY_TEMPLATE: &str = include_str!("../../assets/pseudo_query_prompt.txt");

const PASSAGE_SLOT: &str = "Your passage text goes here.";
const TITLE_SLOT: &str = "{{ title }}";
const CHUNK_SLOT: &str = "{{ chunk }}";

/// Marker preceding the task-specific inputs in both templates.
pub const TASK_MARKER: &str = "### Task Begin";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PromptFamily {
    Chunking,
    PseudoQuery,
}

impl PromptFamily {
    /// Identifies a rendered prompt by the opening line of its template.
    pub fn classify(prompt: &str) -> Option<Self> {
        let opening = |t: &str| t.lines().next().unwrap_or_default().to_string();
        let p = prompt.trim_start();
        if p.starts_with(&opening(CHUNKING_TEMPLATE)) {
            Some(Self::Chunking)
        } else if p.starts_with(&opening(PSEUDO_QUERY_TEMPLATE)) {
            Some(Self::PseudoQuery)
        } else {
            None
        }
    }
}

pub fn render_chunking_prompt(passage: &str) -> String {
    let at = CHUNKING_TEMPLATE
        .rfind(PASSAGE_SLOT)
        .expect("chunking template has a passage slot");
    let mut out = String::with_capacity(CHUNKING_TEMPLATE.len() + passage.len());
    out.push_str(&CHUNKING_TEMPLATE[..at]);
    out.push_str(passage.trim());
    out.push_str(&CHUNKING_TEMPLATE[at + PASSAGE_SLOT.len()..]);
    out
}

/// Titles are flattened to one line so the prompt stays line-structured.
pub fn render_pseudo_query_prompt(title: &str, chunk: &str) -> String {
    let (head, rest) = PSEUDO_QUERY_TEMPLATE
        .split_once(TITLE_SLOT)
        .expect("template has a title slot");
    let (mid, tail) = rest.split_once(CHUNK_SLOT).expect("template has a chunk slot");
    let title = title.split_whitespace().collect::<Vec<_>>().join(" ");
    format!("{head}{title}{mid}{}{tail}", chunk.trim())
}

/// Pulls the first well-formed top-level JSON array out of a model reply,
/// tolerating markdown fences and surrounding commentary.
pub fn extract_json_array(reply: &str) -> Option<Vec<Value>> {
    if let Some(start) = reply.find("```") {
        let after = &reply[start + 3..];
        let body = &after[after.find('\n').map_or(0, |i| i + 1)..];
        if let Some(values) = body.find("```").and_then(|end| first_array(&body[..end])) {
            return Some(values);
        }
    }
    first_array(reply)
}

fn first_array(text: &str) -> Option<Vec<Value>> {
    for (idx, _) in text.match_indices('[') {
        let mut stream = serde_json::Deserializer::from_str(&text[idx..]).into_iter::<Value>();
        if let Some(Ok(Value::Array(values))) = stream.next() {
            return Some(values);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn templates_are_recognized() {
        assert_eq!(
            PromptFamily::classify(&render_chunking_prompt("Honey is sweet.")),
            Some(PromptFamily::Chunking)
        );
        assert_eq!(
            PromptFamily::classify(&render_pseudo_query_prompt("T", "c")),
            Some(PromptFamily::PseudoQuery)
        );
        assert_eq!(PromptFamily::classify("hello"), None);
    }

    #[test]
    fn chunking_prompt_embeds_passage_at_the_end() {
        let p = render_chunking_prompt("Honey is sweet.");
        assert!(p.ends_with("passage:\nHoney is sweet.\n"));
        assert!(!p.contains(PASSAGE_SLOT));
        // the worked examples stay intact
        assert!(p.contains("\"chunk_title\": \"Composition of Honey\""));
    }

    #[test]
    fn pseudo_query_prompt_fills_slots() {
        let p = render_pseudo_query_prompt("IRS Tax\nObligations", "No taxes owed.");
        assert!(p.ends_with("title: IRS Tax Obligations\nchunk: No taxes owed.\n"));
    }

    #[test]
    fn extracts_fenced_and_decorated_arrays() {
        let fenced = "Sure!\n```json\n[{\"pseudo_query\": \"a\"}]\n```\nHope this helps [1].";
        assert_eq!(extract_json_array(fenced).unwrap().len(), 1);
        let trailing = "[1, 2] and then [3]";
        assert_eq!(extract_json_array(trailing).unwrap().len(), 2);
        let noise_first = "see [note] below: [{\"a\": \"]\"}]";
        assert_eq!(extract_json_array(noise_first).unwrap().len(), 1);
        assert!(extract_json_array("no json here").is_none());
        assert_eq!(extract_json_array("[]").unwrap().len(), 0);
    }
}
