use super::VerificationError;
use crate::domain::{Atom, Chunk, EvidencePair, SimilarityMatrix};
use crate::gateway::{EmbeddingVector, Gateway};

/// `u·v / (‖u‖‖v‖)`, clamped to `[-1, 1]`.
pub fn cosine_similarity(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64, VerificationError> {
    cosine(u.values(), v.values())
}

pub(crate) fn cosine(u: &[f64], v: &[f64]) -> Result<f64, VerificationError> {
    if u.len() != v.len() {
        return Err(VerificationError::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let norm = |x: &[f64]| x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(VerificationError::ZeroVector);
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// Evidence selection result: one pair per atom plus the full matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    pub pairs: Vec<EvidencePair>,
    pub similarity: SimilarityMatrix,
}

/// Pairs every atom with its most similar chunk from precomputed
/// embeddings; ties go to the smallest chunk index.
pub fn select_evidence(
    atoms: &[Atom],
    chunks: &[Chunk],
    atom_vectors: &[EmbeddingVector],
    chunk_vectors: &[EmbeddingVector],
) -> Result<Matching, VerificationError> {
    if atoms.is_empty() {
        return Err(VerificationError::EmptyInput("atoms"));
    }
    if chunks.is_empty() {
        return Err(VerificationError::EmptyInput("chunks"));
    }
    if atom_vectors.len() != atoms.len() || chunk_vectors.len() != chunks.len() {
        return Err(VerificationError::EmbeddingCount);
    }
    let rows = atom_vectors
        .iter()
        .map(|a| chunk_vectors.iter().map(|c| cosine_similarity(a, c)).collect())
        .collect::<Result<Vec<Vec<f64>>, _>>()?;
    let similarity = SimilarityMatrix::new(rows).map_err(|e| VerificationError::Internal(e.to_string()))?;
    let pairs = atoms
        .iter()
        .enumerate()
        .map(|(i, atom)| {
            let j = similarity.argmax(i).expect("at least one chunk");
            EvidencePair {
                atom: atom.clone(),
                chunk: chunks[j].clone(),
                similarity: similarity.get(i, j),
            }
        })
        .collect();
    Ok(Matching { pairs, similarity })
}

/// Embeds atoms and chunks (one batched call each) and selects evidence.
pub fn match_atoms(atoms: &[Atom], chunks: &[Chunk], gateway: &Gateway) -> Result<Matching, VerificationError> {
    if atoms.is_empty() {
        return Err(VerificationError::EmptyInput("atoms"));
    }
    if chunks.is_empty() {
        return Err(VerificationError::EmptyInput("chunks"));
    }
    let atom_texts: Vec<String> = atoms.iter().map(|a| a.text.clone()).collect();
    let chunk_texts: Vec<String> = chunks.iter().map(|c| c.text.clone()).collect();
    let atom_vectors = gateway.embed(&atom_texts)?;
    let chunk_vectors = gateway.embed(&chunk_texts)?;
    select_evidence(atoms, chunks, &atom_vectors, &chunk_vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::AtomCategory;
    use proptest::prelude::*;

    fn ev(values: &[f64]) -> EmbeddingVector {
        EmbeddingVector::new(values.to_vec()).unwrap()
    }

    #[test]
    fn identity_and_orthogonality() {
        assert_eq!(cosine_similarity(&ev(&[1.0, 0.0]), &ev(&[1.0, 0.0])).unwrap(), 1.0);
        assert_eq!(cosine_similarity(&ev(&[1.0, 0.0]), &ev(&[0.0, 1.0])).unwrap(), 0.0);
    }

    #[test]
    fn worked_value() {
        // 32 / (sqrt(14) * sqrt(77)), evaluated by hand
        let got = cosine_similarity(&ev(&[1.0, 2.0, 3.0]), &ev(&[4.0, 5.0, 6.0])).unwrap();
        assert!((got - 0.974_631_846_2).abs() < 1e-9, "{got}");
    }

    #[test]
    fn errors() {
        assert_eq!(
            cosine_similarity(&ev(&[1.0]), &ev(&[1.0, 2.0])),
            Err(VerificationError::DimensionMismatch { left: 1, right: 2 })
        );
        assert_eq!(cosine_similarity(&ev(&[0.0, 0.0]), &ev(&[1.0, 2.0])), Err(VerificationError::ZeroVector));
    }

    #[test]
    fn clamped_against_rounding() {
        let v = ev(&[0.1, 0.2, 0.3, 1e-8, 7.0]);
        let s = cosine_similarity(&v, &v).unwrap();
        assert!(s <= 1.0 && (s - 1.0).abs() < 1e-12);
    }

    fn atom(i: usize) -> Atom {
        Atom {
            category: AtomCategory::Objects,
            text: format!("a{i}"),
            index: i,
        }
    }

    fn chunk(j: usize) -> Chunk {
        Chunk {
            text: format!("c{j}"),
            index: j,
        }
    }

    #[test]
    fn single_chunk_takes_everything() {
        let atoms: Vec<_> = (0..3).map(atom).collect();
        let chunks = vec![chunk(0)];
        let av = vec![ev(&[1.0, 0.0]), ev(&[0.0, 1.0]), ev(&[-1.0, 0.5])];
        let m = select_evidence(&atoms, &chunks, &av, &[ev(&[0.3, 0.3])]).unwrap();
        assert!(m.pairs.iter().all(|p| p.chunk.index == 0));
    }

    #[test]
    fn identical_chunks_tie_to_first() {
        let atoms: Vec<_> = (0..2).map(atom).collect();
        let chunks: Vec<_> = (0..3).map(chunk).collect();
        let cv = vec![ev(&[1.0, 1.0]); 3];
        let m = select_evidence(&atoms, &chunks, &[ev(&[1.0, 0.0]), ev(&[0.0, 1.0])], &cv).unwrap();
        assert!(m.pairs.iter().all(|p| p.chunk.index == 0));
    }

    #[test]
    fn empty_inputs_are_rejected() {
        assert_eq!(
            select_evidence(&[], &[chunk(0)], &[], &[ev(&[1.0])]),
            Err(VerificationError::EmptyInput("atoms"))
        );
        assert_eq!(
            select_evidence(&[atom(0)], &[], &[ev(&[1.0])], &[]),
            Err(VerificationError::EmptyInput("chunks"))
        );
    }

    proptest! {
        #[test]
        fn symmetric_and_scale_invariant(
            u in proptest::collection::vec(-10.0f64..10.0, 4),
            v in proptest::collection::vec(-10.0f64..10.0, 4),
            alpha in 0.01f64..100.0,
        ) {
            prop_assume!(u.iter().any(|x| x.abs() > 1e-3) && v.iter().any(|x| x.abs() > 1e-3));
            let (eu, evv) = (ev(&u), ev(&v));
            let scaled = ev(&u.iter().map(|x| x * alpha).collect::<Vec<_>>());
            let base = cosine_similarity(&eu, &evv).unwrap();
            prop_assert!((base - cosine_similarity(&evv, &eu).unwrap()).abs() < 1e-12);
            prop_assert!((base - cosine_similarity(&scaled, &evv).unwrap()).abs() < 1e-9);
            prop_assert!((-1.0..=1.0).contains(&base));
        }
    }
}
