/// One manifest line: `id\tpath\tlanguage\tdomain\ttranscript`, with `-`
/// standing for a missing transcript.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRecord {
    pub id: String,
    /// Frames file, relative to the data directory.
    pub path: String,
    pub language: String,
    pub domain: String,
    /// Space-separated grapheme symbols.
    pub transcript: Option<String>,
}

pub fn render_manifest(records: &[ManifestRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let t = r.transcript.as_deref().unwrap_or("-");
        out.push_str(&format!("{}\t{}\t{}\t{}\t{}\n", r.id, r.path, r.language, r.domain, t));
    }
    out
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestRecord>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, line)| {
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 5 {
                return Err(format!("line {}: expected 5 tab-separated fields, found {}", n + 1, f.len()));
            }
            Ok(ManifestRecord {
                id: f[0].to_string(),
                path: f[1].to_string(),
                language: f[2].to_string(),
                domain: f[3].to_string(),
                transcript: (f[4] != "-").then(|| f[4].to_string()),
            })
        })
        .collect()
}

/// Sidecar lines: `id\ttranscript`.
pub fn render_sidecar(rows: &[(String, String)]) -> String {
    rows.iter().map(|(id, t)| format!("{id}\t{t}\n")).collect()
}

pub fn parse_sidecar(text: &str) -> Result<Vec<(String, String)>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, line)| match line.split_once('\t') {
            Some((id, t)) => Ok((id.to_string(), t.to_string())),
            None => Err(format!("line {}: expected `id<TAB>transcript`", n + 1)),
        })
        .collect()
}
