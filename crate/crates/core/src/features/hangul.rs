//! Hangul syllable decomposition and the multi-hot character layout.
//!
//! A precomposed syllable at `U+AC00 + i` splits arithmetically into
//! onset `i / 588`, nucleus `(i % 588) / 28` and coda `i % 28`, where coda
//! 0 means the block has no final consonant.

const SYLLABLE_BASE: u32 = 0xAC00;
const SYLLABLE_LAST: u32 = 0xD7A3;
const NUCLEUS_COUNT: u32 = 21;
const CODA_COUNT: u32 = 28;
const BLOCK: u32 = NUCLEUS_COUNT * CODA_COUNT; // 588

/// Multi-hot slot layout: onsets, nuclei, codas, then one slot each for
/// whitespace and for anything that is not a Hangul syllable.
pub struct CharVocab;

impl CharVocab {
    pub const ONSETS: usize = 19;
    pub const NUCLEI: usize = 21;
    pub const CODAS: usize = 27;
    pub const ONSET_OFFSET: usize = 0;
    pub const NUCLEUS_OFFSET: usize = Self::ONSET_OFFSET + Self::ONSETS;
    pub const CODA_OFFSET: usize = Self::NUCLEUS_OFFSET + Self::NUCLEI;
    pub const SPACE_SLOT: usize = Self::CODA_OFFSET + Self::CODAS;
    pub const OTHER_SLOT: usize = Self::SPACE_SLOT + 1;
    pub const DIM: usize = Self::OTHER_SLOT + 1;

    /// Active slots for one character (2 or 3 for Hangul, 1 otherwise).
    pub fn slots(ch: char) -> Vec<usize> {
        let d = decompose_hangul(ch);
        match d.class {
            CharClass::Space => vec![Self::SPACE_SLOT],
            CharClass::Other => vec![Self::OTHER_SLOT],
            CharClass::Hangul => {
                let mut s = Vec::with_capacity(3);
                s.extend(d.onset.map(|o| Self::ONSET_OFFSET + usize::from(o)));
                s.extend(d.nucleus.map(|n| Self::NUCLEUS_OFFSET + usize::from(n)));
                s.extend(d.coda.map(|c| Self::CODA_OFFSET + usize::from(c)));
                s
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CharClass {
    Hangul,
    Space,
    Other,
}

/// Jamo indices of one character. `coda` is the coda *slot* (0..27), i.e.
/// the Unicode coda index minus one; `None` for open syllables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Decomposition {
    pub onset: Option<u8>,
    pub nucleus: Option<u8>,
    pub coda: Option<u8>,
    pub class: CharClass,
}

pub fn decompose_hangul(ch: char) -> Decomposition {
    let code = u32::from(ch);
    if (SYLLABLE_BASE..=SYLLABLE_LAST).contains(&code) {
        let i = code - SYLLABLE_BASE;
        let coda = i % CODA_COUNT;
        return Decomposition {
            onset: Some((i / BLOCK) as u8),
            nucleus: Some(((i % BLOCK) / CODA_COUNT) as u8),
            coda: (coda > 0).then(|| (coda - 1) as u8),
            class: CharClass::Hangul,
        };
    }
    let class = if ch.is_whitespace() {
        CharClass::Space
    } else {
        CharClass::Other
    };
    Decomposition {
        onset: None,
        nucleus: None,
        coda: None,
        class,
    }
}

/// Inverse of [`decompose_hangul`] for syllables.
pub fn compose_hangul(onset: u8, nucleus: u8, coda: Option<u8>) -> Option<char> {
    if usize::from(onset) >= CharVocab::ONSETS
        || usize::from(nucleus) >= CharVocab::NUCLEI
        || coda.is_some_and(|c| usize::from(c) >= CharVocab::CODAS)
    {
        return None;
    }
    let coda_index = coda.map_or(0, |c| u32::from(c) + 1);
    let code = SYLLABLE_BASE + u32::from(onset) * BLOCK + u32::from(nucleus) * CODA_COUNT + coda_index;
    char::from_u32(code)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ga_and_gan() {
        let ga = decompose_hangul('가');
        assert_eq!((ga.onset, ga.nucleus, ga.coda), (Some(0), Some(0), None));
        let gan = decompose_hangul('간');
        assert_eq!((gan.onset, gan.nucleus, gan.coda), (Some(0), Some(0), Some(3)));
        assert_eq!(gan.class, CharClass::Hangul);
    }

    #[test]
    fn non_hangul_classes() {
        assert_eq!(decompose_hangul(' ').class, CharClass::Space);
        assert_eq!(decompose_hangul('A').class, CharClass::Other);
        // compatibility jamo are not precomposed syllables
        assert_eq!(decompose_hangul('ㄱ').class, CharClass::Other);
    }

    #[test]
    fn slot_layout_is_disjoint_and_exhaustive() {
        assert_eq!(CharVocab::NUCLEUS_OFFSET, 19);
        assert_eq!(CharVocab::CODA_OFFSET, 40);
        assert_eq!(CharVocab::SPACE_SLOT, 67);
        assert_eq!(CharVocab::OTHER_SLOT, 68);
        assert_eq!(CharVocab::DIM, 69);
        assert_eq!(CharVocab::slots('가'), vec![0, 19]);
        assert_eq!(CharVocab::slots('간'), vec![0, 19, 43]);
        // last syllable: onset 18, nucleus 20, coda 27 -> slot 26
        assert_eq!(CharVocab::slots('힣'), vec![18, 39, 66]);
    }

    #[test]
    fn compose_rejects_out_of_range() {
        assert_eq!(compose_hangul(0, 0, Some(3)), Some('간'));
        assert_eq!(compose_hangul(19, 0, None), None);
        assert_eq!(compose_hangul(0, 21, None), None);
        assert_eq!(compose_hangul(0, 0, Some(27)), None);
    }
}
