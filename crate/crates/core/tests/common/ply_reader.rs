//! Minimal PLY parser driven entirely by the header, used to check the writer
//! without sharing any of its code.

use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Scalar {
    Char,
    UChar,
    Short,
    UShort,
    Int,
    UInt,
    Float,
    Double,
}

impl Scalar {
    fn parse(name: &str) -> Result<Self, String> {
        Ok(match name {
            "char" | "int8" => Scalar::Char,
            "uchar" | "uint8" => Scalar::UChar,
            "short" | "int16" => Scalar::Short,
            "ushort" | "uint16" => Scalar::UShort,
            "int" | "int32" => Scalar::Int,
            "uint" | "uint32" => Scalar::UInt,
            "float" | "float32" => Scalar::Float,
            "double" | "float64" => Scalar::Double,
            other => return Err(format!("unknown scalar type {other}")),
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::Char | Scalar::UChar => 1,
            Scalar::Short | Scalar::UShort => 2,
            Scalar::Int | Scalar::UInt | Scalar::Float => 4,
            Scalar::Double => 8,
        }
    }

    fn read(self, b: &[u8]) -> f64 {
        match self {
            Scalar::Char => b[0] as i8 as f64,
            Scalar::UChar => b[0] as f64,
            Scalar::Short => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::UShort => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::Int => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::UInt => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::Float => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::Double => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

/// Vertex element of a binary little-endian PLY as one map of property
/// name to values per vertex.
pub fn read_vertices(bytes: &[u8]) -> Result<Vec<HashMap<String, f64>>, String> {
    const END: &[u8] = b"end_header\n";
    let end = bytes
        .windows(END.len())
        .position(|w| w == END)
        .ok_or("no end_header")?
        + END.len();
    let header = std::str::from_utf8(&bytes[..end]).map_err(|e| e.to_string())?;
    let mut lines = header.lines();
    if lines.next() != Some("ply") {
        return Err("missing magic".into());
    }

    let mut count = None;
    let mut props: Vec<(String, Scalar)> = Vec::new();
    let mut in_vertex = false;
    for line in lines {
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["format", "binary_little_endian", "1.0"] => {}
            ["format", ..] => return Err(format!("unsupported format line {line:?}")),
            ["element", "vertex", n] => {
                count = Some(n.parse::<usize>().map_err(|e| e.to_string())?);
                in_vertex = true;
            }
            ["element", ..] => return Err(format!("unexpected element {line:?}")),
            ["property", "list", ..] => return Err("list properties unsupported".into()),
            ["property", ty, name] if in_vertex => {
                props.push((name.to_string(), Scalar::parse(ty)?))
            }
            ["comment", ..] | ["end_header"] => {}
            _ => return Err(format!("unexpected header line {line:?}")),
        }
    }
    let count = count.ok_or("no vertex element")?;
    let stride: usize = props.iter().map(|(_, s)| s.size()).sum();
    let body = &bytes[end..];
    if body.len() != count * stride {
        return Err(format!(
            "body has {} bytes, expected {}",
            body.len(),
            count * stride
        ));
    }
    Ok(body
        .chunks_exact(stride)
        .map(|record| {
            let mut offset = 0;
            props
                .iter()
                .map(|(name, ty)| {
                    let v = ty.read(&record[offset..]);
                    offset += ty.size();
                    (name.clone(), v)
                })
                .collect()
        })
        .collect())
}
