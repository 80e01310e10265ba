//! Deterministic fixture generators for the acceptance suite. They carry
//! their own small generator so fixtures never depend on the toolkit's RNG.

/// SplitMix64.
#[derive(Debug, Clone)]
pub struct FixtureRng(u64);

impl FixtureRng {
    pub fn new(seed: u64) -> Self {
        FixtureRng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform-enough index below `n` for fixture purposes.
    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn percent(&mut self) -> usize {
        self.below(100)
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.below(items.len())]
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

pub const WORDS: &[&str] = &[
    "کتاب", "خانه", "مدرسه", "دانشجو", "استاد", "شهر", "روز", "شب", "آب", "نان", "دوست", "خانواده",
    "کار", "زندگی", "دنیا", "ایران", "تهران", "زبان", "فارسی", "تاریخ", "علم", "هنر", "موسیقی", "فیلم",
    "بازی", "ورزش", "فوتبال", "باران", "برف", "آفتاب", "دریا", "کوه", "جنگل", "درخت", "گل", "باغ",
    "ماشین", "قطار", "هواپیما", "خیابان", "بازار", "پول", "قیمت", "خبر", "روزنامه", "مجله", "نامه",
    "پیام", "تلفن", "رایانه", "اینترنت", "سال", "ماه", "هفته", "امروز", "دیروز", "فردا", "صبح", "عصر",
    "من", "تو", "او", "ما", "شما", "آنها", "این", "آن", "رفت", "آمد", "گفت", "دید", "خورد", "نوشت",
    "خواند", "ساخت", "خرید", "فروخت", "دارد", "است", "بود", "شد", "می\u{200C}رود", "می\u{200C}آید",
    "نمی\u{200C}دانم", "خوب", "بد", "بزرگ", "کوچک", "زیبا", "سخت", "آسان", "جدید", "قدیمی", "بسیار",
    "هم", "نیز", "اما", "ولی", "زیرا", "اگر", "چون", "برای", "با", "بی", "از", "به", "در", "تا", "که",
    "را", "و", "یا", "چرا", "کجا", "چگونه", "آیا",
];

const LETTERS: &[char] = &[
    'ا', 'ب', 'پ', 'ت', 'ث', 'ج', 'چ', 'ح', 'خ', 'د', 'ذ', 'ر', 'ز', 'ژ', 'س', 'ش', 'ص', 'ض', 'ط', 'ظ',
    'ع', 'غ', 'ف', 'ق', 'ک', 'گ', 'ل', 'م', 'ن', 'و', 'ه', 'ی',
];

/// The six tracked marks.
pub const MARKS: [char; 6] = ['.', '،', '؟', ':', '!', '؛'];

/// A sentence in canonical form: single spaces, each mark attached to the
/// word before it, only the four labelled marks, ending in `.` or `؟`.
pub fn canonical_sentence(rng: &mut FixtureRng) -> String {
    let n = 4 + rng.below(9);
    let mut parts = Vec::with_capacity(n);
    for i in 0..n {
        let mut word = rng.pick(WORDS).to_string();
        if i + 1 < n {
            match rng.percent() {
                0..=13 => word.push('،'),
                14..=17 => word.push(':'),
                18..=20 => word.push('.'),
                21..=22 => word.push('؟'),
                _ => {}
            }
        } else {
            word.push(if rng.percent() < 75 { '.' } else { '؟' });
        }
        parts.push(word);
    }
    parts.join(" ")
}

/// Free-form text with any of the six marks, including runs, detached
/// marks and sentences with no marks at all.
pub fn marked_text(rng: &mut FixtureRng) -> String {
    if rng.percent() < 10 {
        return (0..1 + rng.below(6)).map(|_| *rng.pick(WORDS)).collect::<Vec<_>>().join(" ");
    }
    let mut out = String::new();
    for i in 0..1 + rng.below(14) {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(rng.pick(WORDS));
        if rng.percent() < 40 {
            if rng.percent() < 20 {
                out.push(' ');
            }
            for _ in 0..1 + rng.below(3) {
                out.push(*rng.pick(&MARKS));
            }
        }
    }
    out
}

/// A random unpunctuated word: mostly vocabulary, some unseen letter
/// strings, some Latin and digit tokens.
pub fn plain_word(rng: &mut FixtureRng) -> String {
    match rng.percent() {
        0..=69 => rng.pick(WORDS).to_string(),
        70..=89 => (0..1 + rng.below(8)).map(|_| *rng.pick(LETTERS)).collect(),
        _ => rng.pick(&["GPT4", "2024", "e-mail", "Tehran", "۱۴۰۳", "x"]).to_string(),
    }
}

pub fn plain_words(rng: &mut FixtureRng, n: usize) -> Vec<String> {
    (0..n).map(|_| plain_word(rng)).collect()
}
