//! Keyboard typo model. Each word longer than two chars receives one edit
//! with probability `rate`; the edit is an adjacent swap, a deletion, a
//! duplication or a QWERTY-neighbor substitution, chosen uniformly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::EvalError;

fn neighbors(c: char) -> &'static str {
    match c.to_ascii_lowercase() {
        'q' => "wa",
        'w' => "qeas",
        'e' => "wrsd",
        'r' => "etdf",
        't' => "ryfg",
        'y' => "tugh",
        'u' => "yihj",
        'i' => "uojk",
        'o' => "ipkl",
        'p' => "ol",
        'a' => "qwsz",
        's' => "awedxz",
        'd' => "serfcx",
        'f' => "drtgvc",
        'g' => "ftyhbv",
        'h' => "gyujnb",
        'j' => "huikmn",
        'k' => "jiolm",
        'l' => "kop",
        'z' => "asx",
        'x' => "zsdc",
        'c' => "xdfv",
        'v' => "cfgb",
        'b' => "vghn",
        'n' => "bhjm",
        'm' => "njk",
        '1' => "2",
        '2' => "13",
        '3' => "24",
        '4' => "35",
        '5' => "46",
        '6' => "57",
        '7' => "68",
        '8' => "79",
        '9' => "80",
        '0' => "9",
        _ => "",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Edit {
    Swap,
    Delete,
    Duplicate,
    Substitute,
}

const EDITS: [Edit; 4] = [Edit::Swap, Edit::Delete, Edit::Duplicate, Edit::Substitute];

fn apply_edit(word: &mut Vec<char>, rng: &mut ChaCha8Rng) {
    let edit = EDITS[rng.random_range(0..EDITS.len())];
    let swaps: Vec<usize> = (0..word.len() - 1).filter(|&i| word[i] != word[i + 1]).collect();
    let subs: Vec<usize> = (0..word.len()).filter(|&i| !neighbors(word[i]).is_empty()).collect();
    match edit {
        Edit::Swap if !swaps.is_empty() => {
            let i = swaps[rng.random_range(0..swaps.len())];
            word.swap(i, i + 1);
        }
        Edit::Delete => {
            word.remove(rng.random_range(0..word.len()));
        }
        Edit::Substitute if !subs.is_empty() => {
            let i = subs[rng.random_range(0..subs.len())];
            let options: Vec<char> = neighbors(word[i]).chars().collect();
            let mut c = options[rng.random_range(0..options.len())];
            if word[i].is_uppercase() {
                c = c.to_ascii_uppercase();
            }
            word[i] = c;
        }
        // duplication also stands in when a swap or substitution has no
        // valid position
        _ => {
            let i = rng.random_range(0..word.len());
            word.insert(i, word[i]);
        }
    }
}

/// Whitespace separators are preserved; only words change.
pub fn inject_typos(text: &str, rate: f64, seed: u64) -> Result<String, EvalError> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(EvalError::InvalidRate(rate));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // (is_word, chars)
    let mut pieces: Vec<(bool, Vec<char>)> = Vec::new();
    for c in text.chars() {
        let is_word = !c.is_whitespace();
        match pieces.last_mut() {
            Some((w, chars)) if *w == is_word => chars.push(c),
            _ => pieces.push((is_word, vec![c])),
        }
    }
    let editable: Vec<usize> = (0..pieces.len()).filter(|&i| pieces[i].0 && pieces[i].1.len() > 2).collect();
    let mut edited = false;
    for &i in &editable {
        if rng.random_bool(rate) {
            apply_edit(&mut pieces[i].1, &mut rng);
            edited = true;
        }
    }
    if !edited && !editable.is_empty() {
        let i = editable[rng.random_range(0..editable.len())];
        apply_edit(&mut pieces[i].1, &mut rng);
    }
    Ok(pieces.into_iter().flat_map(|(_, chars)| chars).collect())
}
