//! Text file formats. Every reader reports 1-based line numbers; `#` lines
//! and blank lines are skipped.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use theme_annotate_core::clustering::{Linkage, ThemeModel};
use theme_annotate_core::dataset::{FeatureMatrix, LabelCorpus};
use theme_annotate_core::eval::{FrequencyBin, MetricsReport, WordConfusion, WordSets};
use theme_annotate_core::pipeline::AnnotationResult;
use theme_annotate_core::textproc::Vocabulary;

use crate::error::{CliError, CliResult};

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Content lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

/// `<image_id>\t<v1> <v2> ... <vD>`; the first row fixes `D`.
pub fn parse_features(text: &str, path: &Path) -> CliResult<FeatureMatrix> {
    let mut ids = Vec::new();
    let mut data = Vec::new();
    let mut dim = None;
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (line, content) in content_lines(text) {
        let (id, values) =
            content.split_once('\t').ok_or_else(|| CliError::format(path, line, "expected `<id>\\t<values>`"))?;
        if id.is_empty() {
            return Err(CliError::format(path, line, "empty image id"));
        }
        if let Some(first) = seen.insert(id.to_string(), line) {
            return Err(CliError::format(path, line, format!("duplicate id `{id}` (first on line {first})")));
        }
        let start = data.len();
        for token in values.split_ascii_whitespace() {
            let v: f64 =
                token.parse().map_err(|_| CliError::format(path, line, format!("`{token}` is not a number")))?;
            if !v.is_finite() {
                return Err(CliError::format(path, line, format!("non-finite value `{token}`")));
            }
            data.push(v);
        }
        let count = data.len() - start;
        match dim {
            None if count == 0 => return Err(CliError::format(path, line, "row has no values")),
            None => dim = Some(count),
            Some(d) if d != count => {
                return Err(CliError::format(path, line, format!("expected {d} values, found {count}")))
            }
            Some(_) => {}
        }
        ids.push(id.to_string());
    }
    let dim = dim.ok_or_else(|| CliError::format(path, 0, "no rows"))?;
    FeatureMatrix::new(ids, dim, data).map_err(|e| CliError::format(path, 0, e.to_string()))
}

pub fn read_features(path: &Path) -> CliResult<FeatureMatrix> {
    parse_features(&read_text(path)?, path)
}

/// Values are printed with Rust's shortest round-trip formatting.
pub fn render_features(m: &FeatureMatrix) -> String {
    let mut out = String::new();
    for (id, row) in m.rows() {
        out.push_str(id);
        out.push('\t');
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            write!(out, "{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// `<image_id>\t<word>[:count] ...`. A line with no tab is an image with no
/// words.
pub fn parse_labels(text: &str, path: &Path) -> CliResult<LabelCorpus> {
    let mut corpus = LabelCorpus::new();
    for (line, content) in content_lines(text) {
        let (id, words) = content.split_once('\t').unwrap_or((content, ""));
        if id.is_empty() {
            return Err(CliError::format(path, line, "empty image id"));
        }
        let mut parsed = Vec::new();
        for token in words.split_ascii_whitespace() {
            let (word, count) = match token.rsplit_once(':') {
                Some((w, c)) if !c.is_empty() && c.bytes().all(|b| b.is_ascii_digit()) => {
                    let n: u32 =
                        c.parse().map_err(|_| CliError::format(path, line, format!("count `{c}` out of range")))?;
                    (w, n)
                }
                _ => (token, 1),
            };
            if word.is_empty() {
                return Err(CliError::format(path, line, format!("empty word in `{token}`")));
            }
            parsed.push((word, count));
        }
        corpus.insert(id, parsed).map_err(|e| CliError::format(path, line, e.to_string()))?;
    }
    Ok(corpus)
}

pub fn read_labels(path: &Path) -> CliResult<LabelCorpus> {
    parse_labels(&read_text(path)?, path)
}

pub fn render_labels(c: &LabelCorpus) -> String {
    let mut out = String::new();
    for (id, words) in c.iter() {
        out.push_str(id);
        out.push('\t');
        let tokens: Vec<String> = words
            .iter()
            .map(|w| if w.count == 1 { w.word.clone() } else { format!("{}:{}", w.word, w.count) })
            .collect();
        out.push_str(&tokens.join(" "));
        out.push('\n');
    }
    out
}

/// One entry per line.
pub fn parse_list(text: &str) -> Vec<String> {
    content_lines(text).map(|(_, l)| l.trim().to_string()).collect()
}

pub fn render_list<S: AsRef<str>>(items: &[S]) -> String {
    items.iter().map(|s| format!("{}\n", s.as_ref())).collect()
}

pub fn read_vocabulary(path: &Path) -> CliResult<Vocabulary> {
    let words = parse_list(&read_text(path)?);
    Vocabulary::from_words(words).map_err(|e| CliError::format(path, 0, e.to_string()))
}

/// Header comment records the clustering parameters; theme `k` on one line,
/// dropped ids under `-1`.
pub fn render_themes(model: &ThemeModel) -> String {
    let mut out = format!(
        "# cutoff={} linkage={} coverage={} themes={} dropped={}\n",
        model.cutoff,
        model.linkage,
        model.coverage,
        model.len(),
        model.dropped.len()
    );
    for (k, members) in model.themes.iter().enumerate() {
        writeln!(out, "{k}\t{}", members.join(",")).unwrap();
    }
    if !model.dropped.is_empty() {
        writeln!(out, "-1\t{}", model.dropped.join(",")).unwrap();
    }
    out
}

pub fn parse_themes(text: &str, path: &Path) -> CliResult<ThemeModel> {
    let mut header: BTreeMap<&str, &str> = BTreeMap::new();
    if let Some(first) = text.lines().next().and_then(|l| l.strip_prefix('#')) {
        header.extend(first.split_whitespace().filter_map(|kv| kv.split_once('=')));
    }
    let mut themes = Vec::new();
    let mut dropped = Vec::new();
    let mut seen = BTreeSet::new();
    for (line, content) in content_lines(text) {
        let (index, ids) = content
            .split_once('\t')
            .ok_or_else(|| CliError::format(path, line, "expected `<theme>\\t<id>,<id>,...`"))?;
        let members: Vec<String> = ids.split(',').filter(|s| !s.is_empty()).map(String::from).collect();
        for id in &members {
            if !seen.insert(id.clone()) {
                return Err(CliError::format(path, line, format!("id `{id}` appears twice")));
            }
        }
        if index == "-1" {
            dropped.extend(members);
            continue;
        }
        let k: usize = index.parse().map_err(|_| CliError::format(path, line, format!("bad theme index `{index}`")))?;
        if k != themes.len() {
            return Err(CliError::format(path, line, format!("expected theme {}, found {k}", themes.len())));
        }
        if members.is_empty() {
            return Err(CliError::format(path, line, format!("theme {k} is empty")));
        }
        themes.push(members);
    }
    dropped.sort();
    let number = |key: &str, default: f64| header.get(key).and_then(|v| v.parse().ok()).unwrap_or(default);
    let linkage: Linkage = header.get("linkage").and_then(|v| v.parse().ok()).unwrap_or_default();
    Ok(ThemeModel { themes, dropped, cutoff: number("cutoff", f64::NAN), linkage, coverage: number("coverage", 1.0) })
}

pub fn read_themes(path: &Path) -> CliResult<ThemeModel> {
    parse_themes(&read_text(path)?, path)
}

/// `<image_id>\t<word>:<score> ...` with 6-decimal scores.
pub fn render_annotations(results: &[AnnotationResult]) -> String {
    let mut out = String::new();
    for r in results {
        out.push_str(&r.image_id);
        out.push('\t');
        let tokens: Vec<String> = r.annotations.iter().map(|(w, s)| format!("{w}:{s:.6}")).collect();
        out.push_str(&tokens.join(" "));
        out.push('\n');
    }
    out
}

/// Predicted word sets keyed by image id; scores are checked but dropped.
pub fn parse_annotations(text: &str, path: &Path) -> CliResult<WordSets> {
    let mut out = WordSets::new();
    for (line, content) in content_lines(text) {
        let (id, tokens) = content.split_once('\t').unwrap_or((content, ""));
        let mut words = BTreeSet::new();
        for token in tokens.split_ascii_whitespace() {
            let (word, score) = token
                .rsplit_once(':')
                .ok_or_else(|| CliError::format(path, line, format!("expected `word:score`, found `{token}`")))?;
            score.parse::<f64>().map_err(|_| CliError::format(path, line, format!("bad score `{score}`")))?;
            words.insert(word.to_string());
        }
        if out.insert(id.to_string(), words).is_some() {
            return Err(CliError::format(path, line, format!("duplicate id `{id}`")));
        }
    }
    Ok(out)
}

pub fn read_annotations(path: &Path) -> CliResult<WordSets> {
    parse_annotations(&read_text(path)?, path)
}

pub fn render_metrics(table: &WordConfusion) -> String {
    let mut out = String::from("word\ttp\tfp\tfn\tprecision\trecall\tfrequency\n");
    for w in &table.words {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{}",
            w.word,
            w.tp,
            w.fp,
            w.fn_,
            w.precision(),
            w.recall(),
            w.train_frequency
        )
        .unwrap();
    }
    out
}

pub fn render_bins(bins: &[FrequencyBin]) -> String {
    let mut out = String::from("mean_frequency\tmean_precision\n");
    for b in bins {
        writeln!(out, "{:.6}\t{:.6}", b.mean_frequency, b.mean_precision).unwrap();
    }
    out
}

pub fn render_report(m: &MetricsReport, images: usize, bin_size: usize) -> String {
    let (p, r, f) = m.percent();
    let mut out = String::new();
    writeln!(out, "test images          {images}").unwrap();
    writeln!(out, "vocabulary size (M)  {}", m.vocabulary_size).unwrap();
    writeln!(out, "mean precision (P)   {:.6}", m.mean_precision).unwrap();
    writeln!(out, "mean recall (R)      {:.6}", m.mean_recall).unwrap();
    writeln!(out, "F-measure            {:.6}", m.mean_f).unwrap();
    writeln!(out, "N+                   {}", m.n_plus).unwrap();
    writeln!(out, "P/R/F (%)            {p}/{r}/{f}").unwrap();
    writeln!(out, "bin size             {bin_size}").unwrap();
    out
}
