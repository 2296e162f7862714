use std::fmt::{self, Write};

use super::{Block, BlockKind};

fn support_list(qs: &[usize]) -> String {
    qs.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(",")
}

fn label(b: &Block) -> String {
    let support = support_list(&b.qubit_support());
    let mut s = match b.kind() {
        BlockKind::Primitive { gate, support, angle } => {
            let mut s = format!("{gate}({})", support_list(support));
            if let Some(a) = angle {
                let _ = write!(s, " [angle: {a}]");
            }
            s
        }
        BlockKind::HamEvo { time, .. } => format!("HamEvo({support}) [time: {time}]"),
        BlockKind::Chain(_) => format!("ChainBlock({support})"),
        BlockKind::Kron(_) => format!("KronBlock({support})"),
        BlockKind::Add(_) => format!("AddBlock({support})"),
        BlockKind::Scale { coeff, .. } => format!("ScaleBlock({support}) [coeff: {coeff}]"),
    };
    if let Some(t) = b.tag() {
        let _ = write!(s, " [tag: {t}]");
    }
    s
}

fn walk(b: &Block, prefix: &str, out: &mut String) {
    let children = b.children();
    for (k, c) in children.iter().enumerate() {
        let last = k + 1 == children.len();
        let (branch, cont) = if last { ("└── ", "    ") } else { ("├── ", "│   ") };
        let _ = writeln!(out, "{prefix}{branch}{}", label(c));
        walk(c, &format!("{prefix}{cont}"), out);
    }
}

pub(super) fn render_tree(b: &Block) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", label(b));
    walk(b, "", &mut out);
    out
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(render_tree(self).trim_end())
    }
}

#[cfg(test)]
mod tests {
    use crate::blockir::*;

    #[test]
    fn qft_tree() {
        let text = build_qft(&[0, 1]).unwrap().tree();
        let expected = "\
ChainBlock(0,1) [tag: qft]
├── ChainBlock(0,1)
│   ├── H(0)
│   └── ChainBlock(0,1)
│       └── CPHASE(1,0) [angle: (const 1.5707963267948966)]
└── H(1)
";
        assert_eq!(text, expected);
    }

    #[test]
    fn scaled_evolution() {
        let g = scale(2.0, kron([z(0), z(1)]).unwrap());
        let text = hamevo(g, "t").unwrap().to_string();
        assert_eq!(
            text,
            "HamEvo(0,1) [time: (var t)]\n└── ScaleBlock(0,1) [coeff: (const 2)]\n    └── KronBlock(0,1)\n        ├── Z(0)\n        └── Z(1)"
        );
    }
}
