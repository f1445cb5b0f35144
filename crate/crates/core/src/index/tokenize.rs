/// Lowercases and splits on anything that is not a letter, digit or dash.
///
/// Leading and trailing dashes are trimmed from each token. A dash-joined
/// numeric identifier ("32-41-41-000-801") is emitted whole, followed by its
/// fields.
pub fn tokenize(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let mut out = Vec::new();
    for raw in lower.split(|c: char| !(c.is_alphanumeric() || c == '-')) {
        let token = raw.trim_matches('-');
        if token.is_empty() {
            continue;
        }
        out.push(token.to_string());
        if token.contains('-') {
            let fields: Vec<&str> = token.split('-').collect();
            if fields.iter().all(|f| !f.is_empty() && f.bytes().all(|b| b.is_ascii_digit())) {
                out.extend(fields.into_iter().map(str::to_string));
            }
        }
    }
    out
}
