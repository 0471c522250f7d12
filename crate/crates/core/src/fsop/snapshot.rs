//! Binary snapshots of a state with its grid metadata.
//!
//! Layout: the magic line `DFSNAP1`, one `key value` line per metadata
//! field (reals as the hex image of their bits), an `end` line, then the
//! coefficients as little-endian `f64`. Round trips are bit-exact.

use std::io::{BufRead, BufReader, Read, Write};

use super::grid::{GridConfig, RigidBodyParams, Stretching};
use super::state::FlowState;
use crate::error::{Error, Result};

const MAGIC: &str = "DFSNAP1";

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub grid: GridConfig,
    pub body: RigidBodyParams,
    pub state: FlowState,
}

fn hex(x: f64) -> String {
    format!("{:016x}", x.to_bits())
}

fn unhex(s: &str) -> Result<f64> {
    u64::from_str_radix(s, 16).map(f64::from_bits).map_err(|e| Error::Format(format!("bad real `{s}`: {e}")))
}

pub fn write_snapshot<W: Write>(mut w: W, snap: &Snapshot) -> Result<()> {
    let s = &snap.state;
    let stretching = match snap.grid.stretching {
        Stretching::Uniform => "uniform",
        Stretching::Logarithmic => "logarithmic",
    };
    let mut head = format!("{MAGIC}\n");
    head += &format!("outer_radius {}\n", hex(snap.grid.outer_radius));
    head += &format!("radial_points {}\n", snap.grid.radial_points);
    head += &format!("fourier_modes {}\n", snap.grid.fourier_modes);
    head += &format!("stretching {stretching}\n");
    head += &format!("mass {}\n", hex(snap.body.mass));
    head += &format!("inertia {}\n", hex(snap.body.inertia));
    head += &format!("intervals {}\n", s.intervals);
    head += &format!("modes {}\n", s.modes);
    head += &format!("time {}\n", hex(s.time));
    head += &format!("ell_x {}\n", hex(s.ell[0]));
    head += &format!("ell_y {}\n", hex(s.ell[1]));
    head += &format!("omega {}\n", hex(s.omega));
    head += &format!("coeffs {}\nend\n", s.coeffs.len());
    w.write_all(head.as_bytes())?;
    let mut buf = Vec::with_capacity(8 * s.coeffs.len());
    for c in &s.coeffs {
        buf.extend_from_slice(&c.to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

pub fn read_snapshot<R: Read>(r: R) -> Result<Snapshot> {
    let mut rd = BufReader::new(r);
    let mut line = String::new();
    let mut next = |rd: &mut BufReader<R>| -> Result<String> {
        line.clear();
        if rd.read_line(&mut line)? == 0 {
            return Err(Error::Format("unexpected end of header".into()));
        }
        Ok(line.trim_end().to_string())
    };
    if next(&mut rd)? != MAGIC {
        return Err(Error::Format("not a snapshot (bad magic)".into()));
    }
    let mut kv = std::collections::HashMap::new();
    loop {
        let l = next(&mut rd)?;
        if l == "end" {
            break;
        }
        let (k, v) = l.split_once(' ').ok_or_else(|| Error::Format(format!("bad header line `{l}`")))?;
        kv.insert(k.to_string(), v.to_string());
    }
    let get = |k: &str| kv.get(k).ok_or_else(|| Error::Format(format!("missing header key `{k}`")));
    let int = |k: &str| -> Result<usize> { get(k)?.parse().map_err(|e| Error::Format(format!("bad `{k}`: {e}"))) };
    let real = |k: &str| -> Result<f64> { unhex(get(k)?) };
    let stretching = match get("stretching")?.as_str() {
        "uniform" => Stretching::Uniform,
        "logarithmic" => Stretching::Logarithmic,
        o => return Err(Error::Format(format!("unknown stretching `{o}`"))),
    };
    let grid = GridConfig {
        outer_radius: real("outer_radius")?,
        radial_points: int("radial_points")?,
        fourier_modes: int("fourier_modes")?,
        stretching,
    };
    let body = RigidBodyParams { mass: real("mass")?, inertia: real("inertia")? };
    let mut state = FlowState::zeros(int("intervals")?, int("modes")?);
    let n = int("coeffs")?;
    if n != state.coeffs.len() {
        return Err(Error::Format(format!("coefficient count {n} does not match the grid ({})", state.coeffs.len())));
    }
    let mut buf = vec![0u8; 8 * n];
    rd.read_exact(&mut buf).map_err(|e| Error::Format(format!("truncated coefficient block: {e}")))?;
    for (c, b) in state.coeffs.iter_mut().zip(buf.chunks_exact(8)) {
        *c = f64::from_le_bytes(b.try_into().unwrap());
    }
    state.time = real("time")?;
    state.ell = [real("ell_x")?, real("ell_y")?];
    state.omega = real("omega")?;
    Ok(Snapshot { grid, body, state })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_exact_round_trip() {
        let mut state = FlowState::zeros(10, 2);
        for (i, c) in state.coeffs.iter_mut().enumerate() {
            *c = (i as f64 * 0.7).sin() / 3.0;
        }
        state.coeffs[3] = -0.0;
        state.ell = [1e-300, -2.5];
        state.omega = std::f64::consts::PI;
        state.time = 0.1;
        let snap = Snapshot { grid: GridConfig::new(12.5, 10, 2), body: RigidBodyParams::disk(1.3), state };
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &snap).unwrap();
        let back = read_snapshot(&buf[..]).unwrap();
        assert_eq!(back, snap);
        let bits = |s: &FlowState| s.coeffs.iter().map(|c| c.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back.state), bits(&snap.state));
        assert!(read_snapshot(&buf[..buf.len() - 1]).is_err());
    }
}
