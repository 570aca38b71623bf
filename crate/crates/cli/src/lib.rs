//! Command-line pipeline: preprocess, embed, train, evaluate, report.

pub mod commands;
pub mod config;

/// Class of the innermost library error in `err`'s chain, or `"cli"`.
pub fn error_class(err: &anyhow::Error) -> &'static str {
    err.chain()
        .find_map(|e| e.downcast_ref::<boostcnn::Error>())
        .map_or("cli", boostcnn::Error::class)
}

/// One-line rendering of `err` and its causes, skipping causes already
/// spelled out by the message before them.
pub fn error_message(err: &anyhow::Error) -> String {
    let mut parts: Vec<String> = Vec::new();
    for cause in err.chain() {
        let text = cause.to_string().replace('\n', " ");
        if parts.last().is_none_or(|prev| !prev.contains(&text)) {
            parts.push(text);
        }
    }
    parts.join(": ")
}
