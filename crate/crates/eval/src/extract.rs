/// Pulls the candidate module out of a model response.
///
/// 1. the body of the first closed triple-backtick fence;
/// 2. otherwise the longest span from a line-leading `MODULE` to the last
///    `ENDMODULE` (both case-insensitive);
/// 3. otherwise the whole response, trimmed.
pub fn extract_code(response: &str) -> String {
    if let Some(block) = first_fence(response) {
        return block.to_string();
    }
    if let Some(span) = module_span(response) {
        return span.to_string();
    }
    response.trim().to_string()
}

fn first_fence(text: &str) -> Option<&str> {
    let open = text.find("```")?;
    // The rest of the opening line is the info string.
    let body_start = open + 3 + text[open + 3..].find('\n')? + 1;
    let close = text[body_start..].find("```")? + body_start;
    Some(text[body_start..close].trim_end_matches([' ', '\t']).trim_end_matches('\n'))
}

fn module_span(text: &str) -> Option<&str> {
    // ASCII uppercasing keeps byte offsets aligned with `text`.
    let upper = text.to_ascii_uppercase();
    let start = upper.match_indices("MODULE").map(|(i, _)| i).find(|&i| {
        let before = &upper[..i];
        let at_line_start = before
            .rsplit('\n')
            .next()
            .is_some_and(|line| line.chars().all(char::is_whitespace));
        let followed_by_space = upper[i + 6..].starts_with(char::is_whitespace);
        at_line_start && followed_by_space
    })?;
    let end = upper.rfind("ENDMODULE")? + "ENDMODULE".len();
    (end > start + 6).then(|| &text[start..end])
}
