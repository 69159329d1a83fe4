//! `.bbm` files: a one-line JSON header followed by raw little-endian blocks.
//!
//! Header: `{"version":1,"num_layers":ℓ,"block_sizes":[…],"bandwidth":w,"scalar":"c128"}\n`.
//! Body: every in-band block in row-major block order (`a` ascending, then
//! offset ascending), entries column-major, each entry 16 bytes (real `f64`
//! then imaginary `f64`, little-endian).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use faer::Mat;
use serde::{Deserialize, Serialize};

use super::{BlockBandedMatrix, BlockLayout};
use crate::error::{Error, Result};
use crate::C64;

const VERSION: u32 = 1;
const SCALAR: &str = "c128";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    version: u32,
    num_layers: usize,
    block_sizes: Vec<usize>,
    bandwidth: usize,
    scalar: String,
}

pub fn write_bbm_to<W: Write>(m: &BlockBandedMatrix, mut out: W) -> Result<()> {
    let layout = m.layout();
    let header = Header {
        version: VERSION,
        num_layers: layout.num_layers(),
        block_sizes: layout.block_sizes().to_vec(),
        bandwidth: layout.bandwidth(),
        scalar: SCALAR.into(),
    };
    let line = serde_json::to_string(&header).map_err(|e| Error::Format(e.to_string()))?;
    out.write_all(line.as_bytes())?;
    out.write_all(b"\n")?;
    for (_, _, blk) in m.iter_blocks() {
        for j in 0..blk.ncols() {
            for i in 0..blk.nrows() {
                let z = blk[(i, j)];
                out.write_all(&z.re.to_le_bytes())?;
                out.write_all(&z.im.to_le_bytes())?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_bbm_from<R: Read>(input: R) -> Result<BlockBandedMatrix> {
    let mut input = BufReader::new(input);
    let mut line = String::new();
    input.read_line(&mut line)?;
    let header: Header = serde_json::from_str(line.trim_end())
        .map_err(|e| Error::Format(format!("bad header: {e}")))?;
    if header.version != VERSION {
        return Err(Error::Format(format!(
            "unsupported version {}",
            header.version
        )));
    }
    if header.scalar != SCALAR {
        return Err(Error::Format(format!(
            "unsupported scalar type {:?}",
            header.scalar
        )));
    }
    if header.block_sizes.len() != header.num_layers {
        return Err(Error::Format(format!(
            "num_layers = {} but {} block sizes given",
            header.num_layers,
            header.block_sizes.len()
        )));
    }
    let layout = BlockLayout::new(header.block_sizes, header.bandwidth)?;
    let mut buf = [0u8; 16];
    let mut failed = None;
    let m = BlockBandedMatrix::from_fn(&layout, |a, b| {
        let (r, c) = (layout.block_size(a), layout.block_size(b));
        let mut blk = Mat::<C64>::zeros(r, c);
        if failed.is_some() {
            return blk;
        }
        for j in 0..c {
            for i in 0..r {
                if let Err(e) = input.read_exact(&mut buf) {
                    failed = Some(Error::Format(format!("truncated block ({a}, {b}): {e}")));
                    return blk;
                }
                let re = f64::from_le_bytes(buf[..8].try_into().unwrap());
                let im = f64::from_le_bytes(buf[8..].try_into().unwrap());
                blk[(i, j)] = C64::new(re, im);
            }
        }
        blk
    })?;
    if let Some(e) = failed {
        return Err(e);
    }
    if input.read(&mut buf)? != 0 {
        return Err(Error::Format("trailing bytes after last block".into()));
    }
    Ok(m)
}

pub fn write_bbm(m: &BlockBandedMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_bbm_to(m, BufWriter::new(File::create(path)?))
}

pub fn read_bbm(path: impl AsRef<Path>) -> Result<BlockBandedMatrix> {
    read_bbm_from(File::open(path)?)
}
