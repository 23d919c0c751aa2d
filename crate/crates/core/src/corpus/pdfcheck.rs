/// Checks the structural skeleton of a PDF without interpreting objects:
/// `%PDF-` header, trailing `%%EOF`, a `startxref` offset that lands on an
/// `xref` table, and in-use xref entries that each point at `N G obj`.
pub fn check_pdf_structure(bytes: &[u8]) -> Result<(), String> {
    if !bytes.starts_with(b"%PDF-") {
        return Err("missing %PDF- header".into());
    }
    let trimmed = trim_end(bytes);
    if !trimmed.ends_with(b"%%EOF") {
        return Err("missing trailing %%EOF".into());
    }
    let sx = rfind(trimmed, b"startxref").ok_or("missing startxref")?;
    let tail = std::str::from_utf8(&trimmed[sx + b"startxref".len()..trimmed.len() - 5])
        .map_err(|_| "startxref offset is not text")?;
    let xref_at: usize = tail
        .trim()
        .parse()
        .map_err(|_| format!("bad startxref offset {:?}", tail.trim()))?;
    if xref_at >= bytes.len() || !bytes[xref_at..].starts_with(b"xref") {
        return Err(format!("startxref {xref_at} does not point at an xref table"));
    }
    let table = std::str::from_utf8(&bytes[xref_at..sx]).map_err(|_| "xref table is not text")?;
    let mut lines = table.lines().skip(1);
    let mut checked = 0usize;
    while let Some(line) = lines.next() {
        let line = line.trim();
        if line.starts_with("trailer") {
            break;
        }
        let mut parts = line.split_whitespace();
        let (Some(first), Some(count), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(format!("bad xref subsection header {line:?}"));
        };
        let first: u64 = first.parse().map_err(|_| format!("bad xref start {first:?}"))?;
        let count: u64 = count.parse().map_err(|_| format!("bad xref count {count:?}"))?;
        for number in first..first + count {
            let entry = lines.next().ok_or("xref table truncated")?;
            let fields: Vec<&str> = entry.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(format!("bad xref entry {entry:?}"));
            }
            if fields[2] != "n" {
                continue;
            }
            let offset: usize = fields[0].parse().map_err(|_| format!("bad offset {:?}", fields[0]))?;
            let generation: u64 = fields[1].parse().map_err(|_| format!("bad generation {:?}", fields[1]))?;
            let expected = format!("{number} {generation} obj");
            if offset >= bytes.len() || !bytes[offset..].starts_with(expected.as_bytes()) {
                return Err(format!("xref entry for object {number} points at offset {offset} which is not {expected:?}"));
            }
            checked += 1;
        }
    }
    if checked == 0 {
        return Err("xref table lists no objects".into());
    }
    Ok(())
}

fn trim_end(bytes: &[u8]) -> &[u8] {
    let end = bytes
        .iter()
        .rposition(|b| !b.is_ascii_whitespace())
        .map_or(0, |p| p + 1);
    &bytes[..end]
}

fn rfind(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack.windows(needle.len()).rposition(|w| w == needle)
}
