//! Two-path counts as masked products of per-relation sparse adjacency
//! matrices.

use sprs::{CsMat, TriMat};

use crate::error::{Error, Result};
use crate::kg::{KnowledgeGraph, RelationId};
use crate::vocabulary::GraphletPattern;

/// Sparse adjacency matrix `A^r` with `A^r[h, t] = 1` for each triple `r(h, t)`.
pub fn adjacency(g: &KnowledgeGraph, r: RelationId) -> CsMat<u64> {
    let n = g.num_entities();
    let pairs = g.relation_pairs(r);
    let mut tri = TriMat::with_capacity((n, n), pairs.len());
    for &(h, t) in pairs {
        tri.add_triplet(h.index(), t.index(), 1u64);
    }
    tri.to_csr()
}

/// `τ(f, A) = A`, `τ(r, A) = Aᵀ`, returned in CSR layout.
fn tau(direction: u8, a: &CsMat<u64>) -> CsMat<u64> {
    if direction == b'f' {
        a.clone()
    } else {
        a.transpose_view().to_csr()
    }
}

/// Counts the two-path pattern `p` (one of the eight open/closed `uv`
/// patterns) as
///
/// * open: `Σ_{l,m,n} τ(u,A^{r1})_{lm} τ(v,A^{r2})_{mn}` over `l≠m, m≠n, n≠l`
/// * closed: `Σ_{l,m} τ(u,A^{r1})_{lm} τ(v,A^{r2})_{ml}` over `l≠m`
pub fn spmm_count(g: &KnowledgeGraph, p: &GraphletPattern, r1: RelationId, r2: RelationId) -> Result<u64> {
    g.check_relation(r1)?;
    g.check_relation(r2)?;
    let name: Vec<u8> = p.name().bytes().filter(|&b| b != b'_').collect();
    let shape_ok = name.len() == 3
        && matches!(name[0], b'f' | b'r')
        && matches!(name[1], b'f' | b'r')
        && matches!(name[2], b'o' | b'c');
    if !shape_ok || p.edges().len() != 2 || p.has_wildcard() {
        return Err(Error::Unsupported(format!(
            "masked-product counting covers the eight open/closed two-path patterns, not `{}`",
            p.name()
        )));
    }
    let left = tau(name[0], &adjacency(g, r1));
    let right = tau(name[1], &adjacency(g, r2));
    let closed = name[2] == b'c';
    let mut total: u64 = 0;
    for (l, row) in left.outer_iterator().enumerate() {
        for (m, &a) in row.iter() {
            if l == m {
                continue;
            }
            let Some(next) = right.outer_view(m) else {
                continue;
            };
            for (n, &b) in next.iter() {
                let keep = if closed { n == l } else { n != m && n != l };
                if keep {
                    total = total
                        .checked_add(a * b)
                        .ok_or_else(|| Error::Overflow(p.name().to_owned()))?;
                }
            }
        }
    }
    Ok(total)
}
