use std::collections::BTreeMap;

/// Tag → occurrence count within one file.
pub type TagHistogram = BTreeMap<String, usize>;

fn is_whitespace(b: u8) -> bool {
    matches!(b, b'\0' | b'\t' | b'\n' | b'\x0c' | b'\r' | b' ')
}

fn is_delimiter(b: u8) -> bool {
    matches!(b, b'(' | b')' | b'<' | b'>' | b'[' | b']' | b'{' | b'}' | b'/' | b'%')
}

fn hex_value(b: u8) -> Option<u8> {
    (b as char).to_digit(16).map(|d| d as u8)
}

/// Canonical text of a decoded name: regular printable ASCII is kept, while
/// `#`, delimiters and non-printable bytes are re-escaped as `#xx`.
fn canonical(name: &[u8]) -> String {
    let mut out = String::with_capacity(name.len() + 1);
    out.push('/');
    for &b in name {
        if (0x21..=0x7e).contains(&b) && b != b'#' && !is_delimiter(b) {
            out.push(b as char);
        } else {
            out.push_str(&format!("#{b:02x}"));
        }
    }
    out
}

/// Counts PDF name tokens (`/Name`) in arbitrary bytes.
///
/// A name runs from `/` to the next whitespace or delimiter. `#xx` escapes
/// are decoded, so `/J#61vaScript` counts as `/JavaScript`; a `#` not
/// followed by two hex digits is kept literally. Empty names are skipped.
pub fn lex_tags(bytes: &[u8]) -> TagHistogram {
    let mut hist = TagHistogram::new();
    let mut name = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] != b'/' {
            i += 1;
            continue;
        }
        i += 1;
        name.clear();
        while i < bytes.len() && !is_whitespace(bytes[i]) && !is_delimiter(bytes[i]) {
            let b = bytes[i];
            if b == b'#' && i + 2 < bytes.len() {
                if let (Some(hi), Some(lo)) = (hex_value(bytes[i + 1]), hex_value(bytes[i + 2])) {
                    name.push(hi << 4 | lo);
                    i += 3;
                    continue;
                }
            }
            name.push(b);
            i += 1;
        }
        if !name.is_empty() {
            *hist.entry(canonical(&name)).or_insert(0) += 1;
        }
    }
    hist
}
