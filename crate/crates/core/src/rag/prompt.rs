use super::{MSchemaDoc, RagError};

pub const PROMPT_VERSION: &str = "v1";

const INSTRUCTION: &str = "You translate questions about a shared e-mobility platform into SQL for an SQLite database. \
Using only the tables below, write one executable SQL SELECT statement that answers the question. \
Reply with the SQL statement only.";

/// Fixed template: instruction, schema documents in rank order, question.
pub fn build_prompt(question: &str, docs: &[&MSchemaDoc]) -> Result<String, RagError> {
    if docs.is_empty() {
        return Err(RagError::NoContext);
    }
    let mut out = format!("### Instruction (prompt {PROMPT_VERSION})\n{INSTRUCTION}\n\n### Database schema\n");
    for doc in docs {
        out.push_str(&doc.text);
        out.push('\n');
    }
    out.push_str("### Question\n");
    out.push_str(question.trim());
    out.push_str("\n\n### SQL\n");
    Ok(out)
}
