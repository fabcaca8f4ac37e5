//! Checkpoint format: one ASCII header line
//! `convlab-net kind=<kind> input=<n> hidden=<n> output=<n> seed=<n>`
//! followed by the parameters as little-endian `f64`, blocks W1, b1, W2, b2.

use std::io::{Read, Write};

use super::Mlp;
use crate::error::{validation, Result};
use crate::features::{ACTION_DIM, STATE_DIM};

const MAGIC: &str = "convlab-net";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetKind {
    Policy,
    Discriminator,
    ActionValue,
}

impl NetKind {
    fn name(self) -> &'static str {
        match self {
            NetKind::Policy => "policy",
            NetKind::Discriminator => "discriminator",
            NetKind::ActionValue => "action-value",
        }
    }

    fn io_dims(self) -> (usize, usize) {
        match self {
            NetKind::Policy | NetKind::ActionValue => (STATE_DIM, 2),
            NetKind::Discriminator => (ACTION_DIM, 1),
        }
    }
}

pub fn write_checkpoint<W: Write>(kind: NetKind, net: &Mlp, mut out: W) -> Result<()> {
    let (input, hidden, output) = net.dims();
    writeln!(
        out,
        "{MAGIC} kind={} input={input} hidden={hidden} output={output} seed={}",
        kind.name(),
        net.seed()
    )?;
    for v in net.params() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_checkpoint<R: Read>(kind: NetKind, mut input: R) -> Result<Mlp> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| validation("checkpoint has no header line"))?;
    let header = std::str::from_utf8(&bytes[..nl])
        .map_err(|_| validation("checkpoint header is not UTF-8"))?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some(MAGIC) {
        return Err(validation("not a convlab checkpoint"));
    }
    let mut field = |name: &str| -> Result<String> {
        let part = parts
            .next()
            .ok_or_else(|| validation(format!("checkpoint header is missing `{name}`")))?;
        part.strip_prefix(name)
            .and_then(|p| p.strip_prefix('='))
            .map(str::to_owned)
            .ok_or_else(|| validation(format!("expected `{name}=` in checkpoint header, got `{part}`")))
    };
    let found_kind = field("kind")?;
    let mut num = |name: &str| -> Result<u64> {
        let v = field(name)?;
        v.parse()
            .map_err(|_| validation(format!("checkpoint `{name}` is not an integer: {v}")))
    };
    let (dims_in, hidden, dims_out, seed) = (num("input")?, num("hidden")?, num("output")?, num("seed")?);
    if found_kind != kind.name() {
        return Err(validation(format!(
            "checkpoint holds a {found_kind} net, expected {}",
            kind.name()
        )));
    }
    let (want_in, want_out) = kind.io_dims();
    if dims_in as usize != want_in || dims_out as usize != want_out || hidden == 0 {
        return Err(validation(format!(
            "checkpoint dims {dims_in}x{hidden}x{dims_out} do not fit a {} net ({want_in}xHx{want_out})",
            kind.name()
        )));
    }
    let mut net = Mlp::zeros(want_in, hidden as usize, want_out);
    net.seed = seed;
    let body = &bytes[nl + 1..];
    if body.len() != net.num_params() * 8 {
        return Err(validation(format!(
            "checkpoint body has {} bytes, expected {}",
            body.len(),
            net.num_params() * 8
        )));
    }
    for (dst, chunk) in net.params_mut().zip(body.chunks_exact(8)) {
        *dst = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let net = Mlp::init(STATE_DIM, 5, 2, 42);
        let mut buf = Vec::new();
        write_checkpoint(NetKind::Policy, &net, &mut buf).unwrap();
        assert!(buf.starts_with(b"convlab-net kind=policy input=21 hidden=5 output=2 seed=42\n"));
        assert_eq!(read_checkpoint(NetKind::Policy, &buf[..]).unwrap(), net);
    }

    #[test]
    fn loader_validates() {
        let net = Mlp::init(ACTION_DIM, 3, 1, 1);
        let mut buf = Vec::new();
        write_checkpoint(NetKind::Discriminator, &net, &mut buf).unwrap();
        assert!(read_checkpoint(NetKind::Policy, &buf[..]).is_err());
        assert!(read_checkpoint(NetKind::Discriminator, &buf[..buf.len() - 1]).is_err());
        assert!(read_checkpoint(NetKind::Discriminator, &b"garbage\n"[..]).is_err());

        let mut bad = Vec::new();
        write_checkpoint(NetKind::Policy, &Mlp::init(ACTION_DIM, 3, 2, 1), &mut bad).unwrap();
        assert!(read_checkpoint(NetKind::Policy, &bad[..]).is_err());
    }
}
