//! Media references and the GIFT-with-media zip archive.
//!
//! Images are referenced from question or answer text with
//! `<img src="name">`. Names are paths relative to the media folder. The
//! archive holds the GIFT file at its root and the referenced files under a
//! single media folder (`images/` by default).

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{Cursor, Read, Write};
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, DateTime, ZipArchive, ZipWriter};

use crate::error::MediaError;
use crate::gift::{emit_gift, parse_gift};
use crate::model::{codes, Diagnostic, Location, MediaField, MediaFile, Question, QuestionBank};

pub const DEFAULT_MEDIA_FOLDER: &str = "images";
pub const DEFAULT_GIFT_NAME: &str = "questions.gift";

/// Files smaller than this are stored uncompressed.
const STORE_BELOW: usize = 1024;

/// Moodle XML prefixes embedded file references with this token.
const PLUGINFILE: &str = "@@PLUGINFILE@@/";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MediaSite {
    pub question: usize,
    pub field: MediaField,
}

/// A media file referenced somewhere in a bank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MediaRef {
    pub name: String,
    pub payload: Option<Vec<u8>>,
    pub referenced_from: Vec<MediaSite>,
}

fn img_src() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#"(?i)<img\b[^>]*?\bsrc\s*=\s*(?:"([^"]*)"|'([^']*)')"#).unwrap())
}

/// Relative media names referenced by `<img>` tags in `text`, in order of
/// appearance. URLs, absolute paths and paths leaving the media folder are
/// not media references.
pub fn image_names(text: &str) -> Vec<String> {
    img_src()
        .captures_iter(text)
        .filter_map(|c| c.get(1).or(c.get(2)).map(|m| m.as_str()))
        .map(|src| src.strip_prefix(PLUGINFILE).unwrap_or(src).to_owned())
        .filter(|src| is_relative_name(src))
        .collect()
}

pub fn is_relative_name(name: &str) -> bool {
    !name.is_empty()
        && !name.contains(':')
        && !name.starts_with('/')
        && !name.contains('\\')
        && name.split('/').all(|seg| !seg.is_empty() && seg != "." && seg != "..")
}

/// Rebuilds `q.media` from the image references in its text, keeping any
/// payloads already attached under the same name.
pub fn attach_media_names(q: &mut Question) {
    let mut names: Vec<String> = Vec::new();
    for (_, text) in q.texts() {
        for name in image_names(text) {
            if !names.contains(&name) {
                names.push(name);
            }
        }
    }
    let old = std::mem::take(&mut q.media);
    q.media = names
        .into_iter()
        .map(|name| {
            let payload = old.iter().find(|m| m.name == name).and_then(|m| m.payload.clone());
            MediaFile { name, payload }
        })
        .collect();
}

/// Every distinct media name referenced by the bank, with the places it is
/// referenced from, sorted by name. Payloads attached to questions are
/// carried over.
pub fn collect_media_refs(bank: &QuestionBank) -> Vec<MediaRef> {
    let mut refs: BTreeMap<String, MediaRef> = BTreeMap::new();
    for (qi, q) in bank.questions.iter().enumerate() {
        for (field, text) in q.texts() {
            for name in image_names(text) {
                let entry = refs.entry(name.clone()).or_insert_with(|| MediaRef {
                    payload: q.media.iter().find(|m| m.name == name).and_then(|m| m.payload.clone()),
                    name,
                    referenced_from: Vec::new(),
                });
                let site = MediaSite { question: qi, field };
                if !entry.referenced_from.contains(&site) {
                    entry.referenced_from.push(site);
                }
            }
        }
    }
    refs.into_values().collect()
}

/// Options for [`bundle_gift_media_with`].
#[derive(Debug, Clone)]
pub struct BundleOptions {
    pub media_folder: String,
    pub gift_name: String,
}

impl Default for BundleOptions {
    fn default() -> Self {
        BundleOptions { media_folder: DEFAULT_MEDIA_FOLDER.into(), gift_name: DEFAULT_GIFT_NAME.into() }
    }
}

/// Builds a GIFT-with-media archive, reading referenced files from
/// `media_dir` by exact, case-sensitive name.
pub fn bundle_gift_media(bank: &QuestionBank, media_dir: &Path) -> Result<Vec<u8>, MediaError> {
    bundle_gift_media_with(bank, Some(media_dir), &BundleOptions::default())
}

/// Payloads already attached to the bank's questions are used first;
/// anything else is read from `media_dir`.
pub fn bundle_gift_media_with(
    bank: &QuestionBank,
    media_dir: Option<&Path>,
    options: &BundleOptions,
) -> Result<Vec<u8>, MediaError> {
    let refs = collect_media_refs(bank);
    if refs.is_empty() {
        return Err(MediaError::NoMedia);
    }

    let mut by_folded: BTreeMap<String, Vec<&str>> = BTreeMap::new();
    for r in &refs {
        by_folded.entry(r.name.to_lowercase()).or_default().push(&r.name);
    }
    let collisions: Vec<String> =
        by_folded.into_values().filter(|v| v.len() > 1).flatten().map(str::to_owned).collect();
    if !collisions.is_empty() {
        return Err(MediaError::CaseCollision(collisions));
    }

    let mut files: Vec<(String, Vec<u8>)> = Vec::with_capacity(refs.len());
    let mut missing = Vec::new();
    for r in refs {
        if let Some(payload) = r.payload {
            files.push((r.name, payload));
            continue;
        }
        match media_dir.map(|dir| resolve_exact(dir, &r.name)).transpose()? {
            Some(Some(bytes)) => files.push((r.name, bytes)),
            _ => missing.push(r.name),
        }
    }
    if !missing.is_empty() {
        return Err(MediaError::Unresolved(missing));
    }

    let gift = emit_gift(bank)?;
    write_archive(&options.gift_name, gift.as_bytes(), &options.media_folder, &files)
}

/// Reads `dir/name` only if every path component exists with exactly that
/// spelling, so lookups stay case-sensitive on case-insensitive file systems.
fn resolve_exact(dir: &Path, name: &str) -> Result<Option<Vec<u8>>, MediaError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| MediaError::Io { path, source }
    };
    let mut current = dir.to_path_buf();
    for segment in name.split('/') {
        let listing = match fs::read_dir(&current) {
            Ok(l) => l,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(io(&current)(e)),
        };
        let mut found = false;
        for entry in listing {
            let entry = entry.map_err(io(&current))?;
            if entry.file_name().to_str() == Some(segment) {
                found = true;
                break;
            }
        }
        if !found {
            return Ok(None);
        }
        current.push(segment);
    }
    if !current.is_file() {
        return Ok(None);
    }
    fs::read(&current).map(Some).map_err(io(&current))
}

fn write_archive(gift_name: &str, gift: &[u8], folder: &str, files: &[(String, Vec<u8>)]) -> Result<Vec<u8>, MediaError> {
    let epoch = DateTime::from_date_and_time(1980, 1, 1, 0, 0, 0).expect("valid DOS date");
    let options = |len: usize| {
        let method = if len < STORE_BELOW { CompressionMethod::Stored } else { CompressionMethod::Deflated };
        SimpleFileOptions::default()
            .compression_method(method)
            .last_modified_time(epoch)
            .unix_permissions(0o644)
    };

    let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
    zip.start_file(gift_name, options(gift.len()))?;
    zip.write_all(gift).map_err(|source| MediaError::Io { path: gift_name.into(), source })?;

    let mut sorted: Vec<&(String, Vec<u8>)> = files.iter().collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    let folder = folder.trim_matches('/');
    for (name, bytes) in sorted {
        let path = if folder.is_empty() { name.clone() } else { format!("{folder}/{name}") };
        zip.start_file(path.as_str(), options(bytes.len()))?;
        zip.write_all(bytes).map_err(|source| MediaError::Io { path: path.into(), source })?;
    }
    Ok(zip.finish()?.into_inner())
}

/// Result of reading a GIFT-with-media archive.
#[derive(Debug, Clone)]
pub struct Unbundled {
    pub bank: QuestionBank,
    pub media: Vec<MediaRef>,
    /// Name of the GIFT file inside the archive.
    pub gift_name: String,
}

fn is_gift_file(name: &str) -> bool {
    let lower = name.to_ascii_lowercase();
    !name.contains('/') && (lower.ends_with(".gift") || lower.ends_with(".txt"))
}

/// Parses the archive's GIFT file and attaches payloads found in the
/// archive to the bank's media references. References with no matching
/// entry are reported as warnings.
pub fn unbundle_gift_media(archive: &[u8]) -> Result<Unbundled, MediaError> {
    let mut zip = ZipArchive::new(Cursor::new(archive))?;
    let names: Vec<String> = zip.file_names().map(str::to_owned).collect();
    let roots: Vec<&String> = names.iter().filter(|n| is_gift_file(n)).collect();
    if roots.len() != 1 {
        return Err(MediaError::RootTextFiles(roots.len()));
    }
    let gift_name = roots[0].clone();

    let mut read = |name: &str| -> Result<Vec<u8>, MediaError> {
        let mut entry = zip.by_name(name)?;
        let mut buf = Vec::with_capacity(entry.size() as usize);
        entry.read_to_end(&mut buf).map_err(|source| MediaError::Io { path: name.into(), source })?;
        Ok(buf)
    };

    let text = String::from_utf8(read(&gift_name)?).map_err(|_| MediaError::NotUtf8)?;
    let mut bank = parse_gift(&text);

    let folders: BTreeSet<&str> = names.iter().filter_map(|n| n.split_once('/').map(|(f, _)| f)).collect();
    let mut search: Vec<&str> = Vec::new();
    if folders.contains(DEFAULT_MEDIA_FOLDER) {
        search.push(DEFAULT_MEDIA_FOLDER);
    }
    search.extend(folders.iter().copied().filter(|f| *f != DEFAULT_MEDIA_FOLDER));

    let mut media = collect_media_refs(&bank);
    for r in &mut media {
        let hit = search
            .iter()
            .map(|f| format!("{f}/{}", r.name))
            .chain(std::iter::once(r.name.clone()))
            .find(|candidate| names.contains(candidate));
        match hit {
            Some(path) => r.payload = Some(read(&path)?),
            None => {
                let site = r.referenced_from[0];
                let at = bank.questions[site.question].origin.unwrap_or(Location::START);
                bank.diagnostics.push(
                    Diagnostic::warning(at, codes::MEDIA_DANGLING, format!("`{}` is referenced but not in the archive", r.name))
                        .for_question(site.question),
                );
            }
        }
    }
    for q in &mut bank.questions {
        for m in &mut q.media {
            m.payload = media.iter().find(|r| r.name == m.name).and_then(|r| r.payload.clone());
        }
    }
    Ok(Unbundled { bank, media, gift_name })
}
