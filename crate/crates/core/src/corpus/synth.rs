//! Synthetic PDF corpus generator.
//!
//! Benign files are minimal but structurally valid PDFs (catalog, page tree,
//! a text stream of random words, xref table, trailer) with one or two
//! unreferenced decoy objects of ordinary kinds: images, GoTo and URI actions,
//! form widgets, text attachments. Malicious files carry zero or one decoy plus
//! an object whose dictionary body is the family's motif, so both classes have
//! the same number of extra objects and only the motif bytes tell them apart.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::split::largest_remainder;
use super::{CorpusError, DatasetManifest, Label, ManifestEntry};
use crate::seed;

/// Vendor column under which the generator records family names.
pub const SYNTH_VENDOR: &str = "synth";

const MOTIFS: &[(&str, &[u8])] = &[
    (
        "JsDropper",
        br#"/Type /Action /S /JavaScript /JS (var s=unescape("%u0c0c%u0c0c");while(s.length<0x40000)s+=s;this.exportDataObject({cName:"d.exe",nLaunch:2});)"#,
    ),
    (
        "LaunchCmd",
        br#"/Type /Action /S /Launch /Win << /F (cmd.exe) /D (c:\\windows\\system32) /P (-w hidden -enc SQBFAFgAIAAoAE4AZQB3AC0ATwBiAGoA) >>"#,
    ),
    (
        "EmbedExe",
        br#"/Type /EmbeddedFile /Subtype /application#2Fx-msdownload /Params << /Size 73802 /CheckSum <9f8e7d6c5b4a39281706f5e4d3c2b1a0> >> /DL 73802"#,
    ),
    (
        "RichFlash",
        br#"/Type /RichMedia /Subtype /Flash /RichMediaContent << /Assets << /Names [(cve.swf) 9 0 R] >> /Configurations [<< /Instances [<< /Params << /FlashVars (sc=9090909090eb1f5e31c0) >> >>] >>] >>"#,
    ),
];

/// Built-in family motifs, by name.
pub fn motif_catalog() -> Vec<(&'static str, &'static [u8])> {
    MOTIFS.to_vec()
}

fn catalog_family(name: &str, prevalence: f64) -> SynthFamily {
    let motif = MOTIFS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, m)| m.to_vec())
        .unwrap_or_default();
    SynthFamily {
        name: name.to_string(),
        motif,
        prevalence,
        window: None,
    }
}

/// The three in-period families used by the examples and acceptance runs.
pub fn default_families() -> Vec<SynthFamily> {
    vec![
        catalog_family("JsDropper", 0.40),
        catalog_family("LaunchCmd", 0.35),
        catalog_family("EmbedExe", 0.25),
    ]
}

/// A family whose motif none of the default families share.
pub fn drift_family() -> SynthFamily {
    catalog_family("RichFlash", 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthFamily {
    pub name: String,
    /// Dictionary body of the planted object.
    pub motif: Vec<u8>,
    pub prevalence: f64,
    /// Restricts first-seen dates to this inclusive window when set.
    pub window: Option<(NaiveDate, NaiveDate)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthCorpusSpec {
    pub n_benign: usize,
    pub n_malicious: usize,
    pub families: Vec<SynthFamily>,
    pub date_range: (NaiveDate, NaiveDate),
    pub seed: u64,
}

impl SynthCorpusSpec {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let bad = |m: String| Err(CorpusError::Spec(m));
        if self.n_benign == 0 || self.n_malicious == 0 {
            return bad("n_benign and n_malicious must both be positive".into());
        }
        if self.families.is_empty() {
            return bad("at least one family is required".into());
        }
        let total: f64 = self.families.iter().map(|f| f.prevalence).sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("family prevalences sum to {total}, expected 1"));
        }
        for f in &self.families {
            if !(f.prevalence >= 0.0) {
                return bad(format!("family {} has negative prevalence", f.name));
            }
            if f.motif.is_empty() {
                return bad(format!("family {} has an empty motif", f.name));
            }
            if let Some((a, b)) = f.window {
                if a > b {
                    return bad(format!("family {} has an inverted date window", f.name));
                }
            }
        }
        if self.date_range.0 > self.date_range.1 {
            return bad("date range is inverted".into());
        }
        Ok(())
    }
}

const WORDS: &[&str] = &[
    "annual", "report", "budget", "meeting", "minutes", "project", "schedule", "summary",
    "invoice", "customer", "service", "quarter", "growth", "market", "review", "policy",
    "security", "network", "design", "draft", "final", "version", "table", "figure",
    "section", "chapter", "appendix", "method", "result", "analysis", "data", "model",
    "system", "process", "quality", "control", "manual", "guide", "install", "update",
    "student", "course", "lecture", "exam", "grade", "research", "paper", "journal",
    "office", "travel", "expense", "claim", "order", "delivery", "product", "price",
    "contract", "agreement", "party", "terms", "notice", "period", "payment", "account",
    "health", "safety", "training", "staff", "team", "manager", "board", "director",
    "city", "council", "public", "planning", "permit", "local", "river", "bridge",
    "energy", "water", "climate", "carbon", "forest", "farm", "harvest", "season",
    "the", "and", "of", "for", "with", "from", "this", "that", "will", "each",
];

const PRODUCERS: &[&str] = &[
    "Microsoft Word 2016",
    "LibreOffice 6.0",
    "Acrobat Distiller 11.0",
    "pdfTeX-1.40.18",
    "Quartz PDFContext",
];

const FONTS: &[&str] = &["Helvetica", "Times-Roman", "Courier", "Helvetica-Bold"];

struct PdfObject {
    number: u32,
    body: Vec<u8>,
}

fn text_stream(rng: &mut ChaCha8Rng) -> Vec<u8> {
    let lines = rng.gen_range(3..=16);
    let mut content = String::from("BT\n/F1 11 Tf\n72 720 Td\n14 TL\n");
    for _ in 0..lines {
        let n = rng.gen_range(5..=9);
        let words: Vec<&str> = (0..n).map(|_| WORDS[rng.gen_range(0..WORDS.len())]).collect();
        let _ = writeln!(content, "({}) '", words.join(" "));
    }
    content.push_str("ET");
    let mut body = format!("<< /Length {} >>\nstream\n", content.len()).into_bytes();
    body.extend_from_slice(content.as_bytes());
    body.extend_from_slice(b"\nendstream");
    body
}

fn render(objects: &[PdfObject], version: u8, info: Option<u32>) -> Vec<u8> {
    let mut out = format!("%PDF-1.{version}\n").into_bytes();
    out.extend_from_slice(b"%\xE2\xE3\xCF\xD3\n");
    let max = objects.iter().map(|o| o.number).max().unwrap_or(0);
    let mut offsets = vec![0usize; max as usize + 1];
    for obj in objects {
        offsets[obj.number as usize] = out.len();
        out.extend_from_slice(format!("{} 0 obj\n", obj.number).as_bytes());
        out.extend_from_slice(&obj.body);
        out.extend_from_slice(b"\nendobj\n");
    }
    let xref = out.len();
    let mut table = format!("xref\n0 {}\n0000000000 65535 f \n", max + 1);
    for off in &offsets[1..] {
        let _ = write!(table, "{off:010} 00000 n \n");
    }
    let info = info.map(|n| format!(" /Info {n} 0 R")).unwrap_or_default();
    let _ = write!(
        table,
        "trailer\n<< /Size {} /Root 1 0 R{info} >>\nstartxref\n{xref}\n%%EOF\n",
        max + 1
    );
    out.extend_from_slice(table.as_bytes());
    out
}

fn decoy(rng: &mut ChaCha8Rng, first_page: u32) -> Vec<u8> {
    let word = WORDS[rng.gen_range(0..WORDS.len())];
    let body = match rng.gen_range(0..6) {
        0 => format!("/Type /Action /S /GoTo /D [{first_page} 0 R /Fit]"),
        1 => format!("/Type /Action /S /URI /URI (https://www.example.org/{word})"),
        2 => {
            let size = rng.gen_range(200..90_000);
            let sum: String = (0..16).map(|_| format!("{:02x}", rng.gen::<u8>())).collect();
            format!(
                "/Type /EmbeddedFile /Subtype /text#2Fplain /Params << /Size {size} /CheckSum <{sum}> >> /DL {size}"
            )
        }
        3 => format!(
            "/Type /XObject /Subtype /Image /Width {} /Height {} /ColorSpace /DeviceRGB /BitsPerComponent 8 /Filter /DCTDecode",
            rng.gen_range(16..2048),
            rng.gen_range(16..2048)
        ),
        4 => format!(
            "/Type /Annot /Subtype /Widget /FT /Tx /T ({word}) /Rect [72 {} 300 {}] /MK << /BG [1 1 1] >>",
            rng.gen_range(100..600),
            rng.gen_range(600..700)
        ),
        _ => "/Type /Action /S /Named /N /NextPage".to_string(),
    };
    format!("<< {body} >>").into_bytes()
}

/// Builds one PDF. `motif`, when given, is planted as an extra object.
fn build_pdf(rng: &mut ChaCha8Rng, motif: Option<&[u8]>) -> Vec<u8> {
    let version = rng.gen_range(4..=7u8);
    let n_pages = rng.gen_range(1..=2u32);
    let font = FONTS[rng.gen_range(0..FONTS.len())];
    let open_action = rng.gen_bool(0.3);
    let with_link = rng.gen_bool(0.3);
    let with_outlines = rng.gen_bool(0.2);
    let with_info = rng.gen_bool(0.7);

    // 1 catalog, 2 pages, 3 font, then per page: page + contents, then extras.
    let mut next = 4u32;
    let mut page_nums = Vec::new();
    let mut objects = Vec::new();
    for _ in 0..n_pages {
        page_nums.push((next, next + 1));
        next += 2;
    }
    let link = with_link.then(|| {
        next += 1;
        next - 1
    });
    let outlines = with_outlines.then(|| {
        next += 1;
        next - 1
    });
    let info = with_info.then(|| {
        next += 1;
        next - 1
    });

    let mut catalog = String::from("<< /Type /Catalog /Pages 2 0 R");
    if open_action {
        let _ = write!(catalog, " /OpenAction [{} 0 R /Fit]", page_nums[0].0);
    }
    if let Some(o) = outlines {
        let _ = write!(catalog, " /Outlines {o} 0 R /PageMode /UseOutlines");
    }
    catalog.push_str(" >>");
    objects.push(PdfObject { number: 1, body: catalog.into_bytes() });

    let kids: Vec<String> = page_nums.iter().map(|(p, _)| format!("{p} 0 R")).collect();
    objects.push(PdfObject {
        number: 2,
        body: format!("<< /Type /Pages /Kids [{}] /Count {} >>", kids.join(" "), n_pages)
            .into_bytes(),
    });
    objects.push(PdfObject {
        number: 3,
        body: format!("<< /Type /Font /Subtype /Type1 /BaseFont /{font} >>").into_bytes(),
    });
    for (i, &(page, contents)) in page_nums.iter().enumerate() {
        let annots = match (i, link) {
            (0, Some(l)) => format!(" /Annots [{l} 0 R]"),
            _ => String::new(),
        };
        objects.push(PdfObject {
            number: page,
            body: format!(
                "<< /Type /Page /Parent 2 0 R /MediaBox [0 0 612 792] /Contents {contents} 0 R /Resources << /Font << /F1 3 0 R >> >>{annots} >>"
            )
            .into_bytes(),
        });
        objects.push(PdfObject { number: contents, body: text_stream(rng) });
    }
    if let Some(l) = link {
        objects.push(PdfObject {
            number: l,
            body: format!(
                "<< /Type /Annot /Subtype /Link /Rect [72 {} 300 {}] /Border [0 0 0] /A << /S /URI /URI (https://www.example.org/{}) >> >>",
                rng.gen_range(100..600),
                rng.gen_range(600..700),
                WORDS[rng.gen_range(0..WORDS.len())]
            )
            .into_bytes(),
        });
    }
    if let Some(o) = outlines {
        objects.push(PdfObject {
            number: o,
            body: b"<< /Type /Outlines /Count 0 >>".to_vec(),
        });
    }
    if let Some(n) = info {
        objects.push(PdfObject {
            number: n,
            body: format!(
                "<< /Producer ({}) /CreationDate (D:2018{:02}{:02}120000Z) >>",
                PRODUCERS[rng.gen_range(0..PRODUCERS.len())],
                rng.gen_range(1..=12),
                rng.gen_range(1..=28)
            )
            .into_bytes(),
        });
    }
    let n_decoys = match motif {
        Some(_) => rng.gen_range(0..=1),
        None => rng.gen_range(1..=2),
    };
    let mut extras: Vec<Vec<u8>> = (0..n_decoys).map(|_| decoy(rng, page_nums[0].0)).collect();
    if let Some(motif) = motif {
        let mut body = b"<< ".to_vec();
        body.extend_from_slice(motif);
        body.extend_from_slice(b" >>");
        extras.push(body);
    }
    for body in extras {
        let at = rng.gen_range(1..=objects.len());
        objects.insert(at, PdfObject { number: next, body });
        next += 1;
    }
    render(&objects, version, info)
}

fn date_in(start: NaiveDate, end: NaiveDate, u: f64) -> NaiveDate {
    let span = (end - start).num_days();
    start + Duration::days(((span as f64) * u).round() as i64)
}

/// Writes the corpus and `manifest.csv` into `out_dir` and returns the manifest.
///
/// Family sizes follow the prevalences by largest-remainder allocation, so they
/// are exact. Without an explicit window, family `i` of `F` draws dates from
/// `0.5 * r1 + 0.5 * (i + r2) / F` of the date range, so later families skew
/// towards later dates while still overlapping.
pub fn generate_synth_corpus(
    spec: &SynthCorpusSpec,
    out_dir: &Path,
) -> Result<DatasetManifest, CorpusError> {
    spec.validate()?;
    let write_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CorpusError::Write { path, source }
    };
    fs::create_dir_all(out_dir).map_err(write_err(out_dir))?;

    let weights: Vec<f64> = spec.families.iter().map(|f| f.prevalence).collect();
    let counts = largest_remainder(spec.n_malicious, &weights)
        .ok_or_else(|| CorpusError::Spec("family prevalences are all zero".into()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed::mix(&[spec.seed, 0]));
    let n_fam = spec.families.len() as f64;
    // (date, family index, draw order)
    let mut malicious: Vec<(NaiveDate, usize, usize)> = Vec::with_capacity(spec.n_malicious);
    for (fi, (family, &count)) in spec.families.iter().zip(&counts).enumerate() {
        for _ in 0..count {
            let date = match family.window {
                Some((a, b)) => date_in(a, b, rng.gen::<f64>()),
                None => {
                    let u = 0.5 * rng.gen::<f64>() + 0.5 * (fi as f64 + rng.gen::<f64>()) / n_fam;
                    date_in(spec.date_range.0, spec.date_range.1, u)
                }
            };
            malicious.push((date, fi, malicious.len()));
        }
    }
    malicious.sort();

    let mut entries = Vec::with_capacity(spec.n_benign + spec.n_malicious);
    for i in 0..spec.n_benign {
        let name = format!("ben_{i:05}.pdf");
        let mut file_rng = ChaCha8Rng::seed_from_u64(seed::mix(&[spec.seed, 1, i as u64]));
        let bytes = build_pdf(&mut file_rng, None);
        let path = out_dir.join(&name);
        fs::write(&path, bytes).map_err(write_err(&path))?;
        entries.push(ManifestEntry::new(name, Label::Benign));
    }
    for (i, &(date, fi, _)) in malicious.iter().enumerate() {
        let family = &spec.families[fi];
        let name = format!("mal_{i:05}.pdf");
        let mut file_rng = ChaCha8Rng::seed_from_u64(seed::mix(&[spec.seed, 2, i as u64]));
        let bytes = build_pdf(&mut file_rng, Some(&family.motif));
        let path = out_dir.join(&name);
        fs::write(&path, bytes).map_err(write_err(&path))?;
        entries.push(
            ManifestEntry::new(name, Label::Malicious)
                .with_date(date)
                .with_family(SYNTH_VENDOR, &family.name),
        );
    }

    let manifest = DatasetManifest::new(entries)?.with_base_dir(out_dir);
    manifest.write_csv(&out_dir.join("manifest.csv"))?;
    Ok(manifest)
}
