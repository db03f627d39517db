//! Synthetic accounts, annotated reply pairs and a clean fine-tuning corpus.
//!
//! Text is built from topic vocabularies of pseudo-Japanese words. A parent
//! post draws from its topic's *post* vocabulary; a genuine reply reuses a
//! fraction of the parent's words and adds words from the same topic's
//! *reply* vocabulary, so post and reply are related without necessarily
//! sharing tokens. Zombie replies are verbatim copies, emoji strings,
//! off-topic general text, or formulaic English/Hindi spam.
//!
//! Account metadata follows per-class lognormal and piecewise-uniform
//! families whose defaults match the class means observed on X in 2024
//! (13.98 vs 42.88 posts/day, follow ratios 2.93 vs 1.26, more zombie
//! accounts younger than 500 days).

use std::collections::HashSet;

use chrono::{DateTime, Datelike, Duration, TimeZone, Utc};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use super::types::{majority_label, AccountRecord, CleanPair, Label, ReplyPair, Vote, ANNOTATORS};
use super::CorpusError;
use crate::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassProfile {
    /// Mean of the lognormal posts-per-day distribution.
    pub posts_per_day_mean: f64,
    pub posts_per_day_sigma: f64,
    /// Share of accounts younger than 500 days.
    pub age_under_500_share: f64,
    /// Share of accounts older than 1800 days.
    pub age_over_1800_share: f64,
    /// Weight of the uniform [0.9, 1.1] follow-ratio component.
    pub follow_ratio_near_one_share: f64,
    /// Log-space parameters of the remaining follow-ratio component.
    pub follow_ratio_log_mu: f64,
    pub follow_ratio_log_sigma: f64,
    pub followers_median: f64,
    pub followers_sigma: f64,
    pub zero_followers_rate: f64,
    pub verified_rate: f64,
    pub latin_name_rate: f64,
    pub empty_profile_rate: f64,
    /// Share of non-empty profiles written in Japanese.
    pub japanese_profile_rate: f64,
    /// Peak posting hour in JST.
    pub peak_hour_jst: f64,
    /// Relative posting weight for Monday..Sunday.
    pub weekday_weights: [f64; 7],
}

impl ClassProfile {
    pub fn general() -> Self {
        Self {
            posts_per_day_mean: 13.98,
            posts_per_day_sigma: 1.5,
            age_under_500_share: 0.18,
            age_over_1800_share: 0.44,
            follow_ratio_near_one_share: 0.10,
            follow_ratio_log_mu: 0.339,
            follow_ratio_log_sigma: 1.27,
            followers_median: 250.0,
            followers_sigma: 1.3,
            zero_followers_rate: 0.005,
            verified_rate: 0.08,
            latin_name_rate: 0.3,
            empty_profile_rate: 0.12,
            japanese_profile_rate: 0.9,
            peak_hour_jst: 12.0,
            weekday_weights: [1.0, 1.0, 1.0, 1.0, 1.0, 1.1, 1.1],
        }
    }

    pub fn zombie() -> Self {
        Self {
            posts_per_day_mean: 42.88,
            posts_per_day_sigma: 1.2,
            age_under_500_share: 0.25,
            age_over_1800_share: 0.34,
            follow_ratio_near_one_share: 0.25,
            follow_ratio_log_mu: 0.239,
            follow_ratio_log_sigma: 0.344,
            followers_median: 900.0,
            followers_sigma: 1.4,
            zero_followers_rate: 0.005,
            verified_rate: 0.85,
            latin_name_rate: 0.95,
            empty_profile_rate: 0.05,
            japanese_profile_rate: 0.05,
            peak_hour_jst: 15.0,
            weekday_weights: [1.5, 1.0, 1.0, 1.0, 1.0, 1.0, 1.5],
        }
    }
}

impl Default for ClassProfile {
    fn default() -> Self {
        Self::general()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_general_accounts: usize,
    pub n_zombie_accounts: usize,
    pub n_general_pairs: usize,
    pub n_zombie_pairs: usize,
    pub n_clean_pairs: usize,
    pub seed: u64,
    /// Fraction of the parent's topic words reused by a genuine reply.
    pub coherence_overlap: f64,
    /// Fraction of zombie replies that copy the parent verbatim.
    pub zombie_duplicate_rate: f64,
    /// Fraction of the remaining zombie replies that are emoji only.
    pub zombie_emoji_rate: f64,
    /// Fraction of the remaining zombie replies written with general
    /// vocabulary from an unrelated topic.
    pub zombie_vocab_overlap: f64,
    pub n_topics: usize,
    /// Per-annotator probability of voting against the reply's true class.
    pub annotator_error_rate: f64,
    /// Snapshot time of every account; ages are measured back from here.
    pub reference_time: DateTime<Utc>,
    pub general: ClassProfile,
    pub zombie: ClassProfile,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_general_accounts: 2000,
            n_zombie_accounts: 2000,
            n_general_pairs: 2000,
            n_zombie_pairs: 2000,
            n_clean_pairs: 4000,
            seed: 0,
            coherence_overlap: 0.3,
            zombie_duplicate_rate: 0.05,
            zombie_emoji_rate: 0.15,
            zombie_vocab_overlap: 0.25,
            n_topics: 24,
            annotator_error_rate: 0.06,
            reference_time: Utc.with_ymd_and_hms(2024, 11, 1, 0, 0, 0).unwrap(),
            general: ClassProfile::general(),
            zombie: ClassProfile::zombie(),
        }
    }
}

fn check_rate(field: &str, v: f64) -> Result<(), CorpusError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(CorpusError::InvalidConfig {
            field: field.to_string(),
            message: format!("must be in [0, 1], got {v}"),
        })
    }
}

fn check_positive(field: &str, v: f64) -> Result<(), CorpusError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CorpusError::InvalidConfig {
            field: field.to_string(),
            message: format!("must be positive and finite, got {v}"),
        })
    }
}

impl ClassProfile {
    fn validate(&self, class: &str) -> Result<(), CorpusError> {
        let f = |name: &str| format!("{class}.{name}");
        for (name, v) in [
            ("age_under_500_share", self.age_under_500_share),
            ("age_over_1800_share", self.age_over_1800_share),
            ("follow_ratio_near_one_share", self.follow_ratio_near_one_share),
            ("zero_followers_rate", self.zero_followers_rate),
            ("verified_rate", self.verified_rate),
            ("latin_name_rate", self.latin_name_rate),
            ("empty_profile_rate", self.empty_profile_rate),
            ("japanese_profile_rate", self.japanese_profile_rate),
        ] {
            check_rate(&f(name), v)?;
        }
        check_rate(&f("age_under_500_share + age_over_1800_share"), self.age_under_500_share + self.age_over_1800_share)?;
        for (name, v) in [
            ("posts_per_day_mean", self.posts_per_day_mean),
            ("posts_per_day_sigma", self.posts_per_day_sigma),
            ("follow_ratio_log_sigma", self.follow_ratio_log_sigma),
            ("followers_median", self.followers_median),
            ("followers_sigma", self.followers_sigma),
        ] {
            check_positive(&f(name), v)?;
        }
        if !self.follow_ratio_log_mu.is_finite() {
            return Err(CorpusError::InvalidConfig {
                field: f("follow_ratio_log_mu"),
                message: "must be finite".into(),
            });
        }
        if !(0.0..24.0).contains(&self.peak_hour_jst) {
            return Err(CorpusError::InvalidConfig {
                field: f("peak_hour_jst"),
                message: format!("must be in [0, 24), got {}", self.peak_hour_jst),
            });
        }
        if self.weekday_weights.iter().any(|w| !(*w >= 0.0 && w.is_finite()))
            || self.weekday_weights.iter().sum::<f64>() <= 0.0
        {
            return Err(CorpusError::InvalidConfig {
                field: f("weekday_weights"),
                message: "must be non-negative with a positive sum".into(),
            });
        }
        Ok(())
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        for (name, v) in [
            ("coherence_overlap", self.coherence_overlap),
            ("zombie_duplicate_rate", self.zombie_duplicate_rate),
            ("zombie_emoji_rate", self.zombie_emoji_rate),
            ("zombie_vocab_overlap", self.zombie_vocab_overlap),
            ("annotator_error_rate", self.annotator_error_rate),
        ] {
            check_rate(name, v)?;
        }
        if self.annotator_error_rate >= 0.5 {
            return Err(CorpusError::InvalidConfig {
                field: "annotator_error_rate".into(),
                message: "must be below 0.5".into(),
            });
        }
        if self.n_topics < 2 {
            return Err(CorpusError::InvalidConfig {
                field: "n_topics".into(),
                message: "need at least 2 topics".into(),
            });
        }
        self.general.validate("general")?;
        self.zombie.validate("zombie")
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SynthCorpus {
    pub accounts: Vec<AccountRecord>,
    pub pairs: Vec<ReplyPair>,
    pub clean_pairs: Vec<CleanPair>,
}

const HIRAGANA: &[&str] = &[
    "あ", "い", "う", "え", "お", "か", "き", "く", "け", "こ", "さ", "し", "す", "せ", "そ", "た", "ち",
    "つ", "て", "と", "な", "に", "ぬ", "ね", "の", "は", "ひ", "ふ", "へ", "ほ", "ま", "み", "む", "め",
    "も", "や", "ゆ", "よ", "ら", "り", "る", "れ", "ろ", "わ", "が", "ぎ", "ぐ", "げ", "ご", "ざ", "じ",
    "ず", "ぜ", "ぞ", "だ", "で", "ど", "ば", "び", "ぶ", "べ", "ぼ", "ぱ", "ぴ", "ぷ",
];
const KATAKANA: &[&str] = &[
    "ア", "イ", "ウ", "エ", "オ", "カ", "キ", "ク", "ケ", "コ", "サ", "シ", "ス", "セ", "ソ", "タ", "チ",
    "ツ", "テ", "ト", "ナ", "ニ", "ノ", "ハ", "ヒ", "フ", "ヘ", "ホ", "マ", "ミ", "ム", "メ", "モ", "ラ",
    "リ", "ル", "レ", "ロ", "ガ", "ギ", "グ", "ゲ", "ゴ", "ジ", "ズ", "ダ", "デ", "ド", "バ", "ビ", "ブ",
    "ベ", "ボ", "パ", "ピ", "プ", "ー",
];
const KANJI: &[char] = &[
    '日', '月', '火', '水', '木', '金', '土', '山', '川', '田', '空', '海', '雨', '雪', '風', '花', '草',
    '森', '駅', '道', '車', '電', '話', '店', '食', '飲', '肉', '魚', '米', '茶', '酒', '家', '町', '村',
    '国', '地', '震', '災', '報', '新', '聞', '音', '楽', '歌', '映', '画', '本', '読', '書', '学', '校',
    '会', '社', '仕', '事', '休', '旅', '行', '夏', '冬', '春', '秋', '猫', '犬', '鳥', '星', '夜', '朝',
    '昼', '晴', '試', '合', '選', '手', '優', '勝', '野', '球', '料', '理', '薬', '病', '院', '医', '服',
];
const FUNCTION_WORDS: &[&str] = &[
    "本当に", "すごい", "なるほど", "それな", "ありがとう", "わかる", "いいね", "やばい", "たしかに",
    "ですね", "だよね", "笑",
];
const ZOMBIE_WORDS: &[&str] = &[
    "wow", "amazing", "nice", "post", "great", "follow", "me", "back", "check", "my", "profile", "bro",
    "love", "this", "thanks", "for", "sharing", "beautiful", "awesome", "so", "true", "good", "morning",
    "best", "wishes", "god", "bless", "you", "super", "cool", "click", "link", "bio", "bahut", "accha",
    "बहुत", "अच्छा", "सुंदर", "धन्यवाद", "जय", "हो",
];
const EMOJI: &[char] = &[
    '😂', '😍', '🔥', '👍', '🙏', '❤', '😊', '🤣', '💯', '✨', '🥰', '😭', '👏', '🌸', '💕', '😎', '🤔',
    '🙌', '🎉', '💖', '😁', '🌹', '⭐', '🇯',
];
const ROMAJI_NAMES: &[&str] = &[
    "taro", "hana", "yuki", "sora", "ken", "mio", "riku", "aoi", "haru", "nana", "sho", "emi", "daichi",
    "saki", "kaito", "rin",
];
const ZOMBIE_NAMES: &[&str] = &[
    "rahul", "amit", "priya", "rohan", "neha", "john", "mike", "crypto", "king", "queen", "star",
    "official", "daily", "vibes", "news", "alpha", "sonu", "deepak", "pooja", "vikas",
];
const JP_PROFILE: &[&str] = &[
    "猫と暮らしています", "ゲーム好き", "無言フォロー失礼します", "社会人", "日常垢", "アニメが好き",
    "カフェ巡り", "写真を撮ります", "東京在住", "大阪", "野球観戦", "料理が趣味", "推し活中", "よろしくお願いします",
];
const EN_FILLER: &[&str] = &[
    "crypto", "trader", "official", "page", "motivation", "daily", "news", "updates", "entrepreneur",
    "fitness", "vibes", "digital", "marketing", "blogger", "dreamer",
];
const HINDI_FILLER: &[&str] = &["जय श्री राम", "भारत", "हर हर महादेव", "सेवा"];

/// (phrase, presence probability for general profiles, for zombie profiles)
const PROFILE_PHRASES: &[(&str, f64, f64)] = &[
    ("follow back", 0.010, 0.16),
    ("dm for promotion", 0.010, 0.11),
    ("social activist", 0.004, 0.04),
    ("jay shree ram", 0.002, 0.02),
    ("content creator", 0.010, 0.08),
    ("no dm", 0.006, 0.05),
    ("govt teacher", 0.002, 0.015),
    ("believe in god", 0.008, 0.06),
    ("cricket lover", 0.003, 0.02),
    ("social worker", 0.004, 0.022),
    ("music lover", 0.030, 0.030),
    ("game streamer", 0.040, 0.005),
];

struct Vocab {
    post: Vec<Vec<String>>,
    reply: Vec<Vec<String>>,
}

const TOPIC_POST_WORDS: usize = 24;
const TOPIC_REPLY_WORDS: usize = 24;

fn pseudo_word(rng: &mut ChaCha8Rng) -> String {
    let u: f64 = rng.random();
    if u < 0.4 {
        (0..2).map(|_| *KANJI.choose(rng).unwrap()).collect()
    } else if u < 0.75 {
        let n = rng.random_range(2..=4);
        (0..n).map(|_| *HIRAGANA.choose(rng).unwrap()).collect()
    } else {
        let n = rng.random_range(3..=4);
        let mut w = String::from(*KATAKANA[..KATAKANA.len() - 1].choose(rng).unwrap());
        for _ in 1..n {
            w.push_str(KATAKANA.choose(rng).unwrap());
        }
        w
    }
}

fn build_vocab(n_topics: usize, rng: &mut ChaCha8Rng) -> Vocab {
    let mut used: HashSet<String> = FUNCTION_WORDS.iter().map(|s| s.to_string()).collect();
    let mut fresh = |rng: &mut ChaCha8Rng| loop {
        let w = pseudo_word(rng);
        if used.insert(w.clone()) {
            return w;
        }
    };
    let mut post = Vec::with_capacity(n_topics);
    let mut reply = Vec::with_capacity(n_topics);
    for _ in 0..n_topics {
        post.push((0..TOPIC_POST_WORDS).map(|_| fresh(rng)).collect());
        reply.push((0..TOPIC_REPLY_WORDS).map(|_| fresh(rng)).collect());
    }
    Vocab { post, reply }
}

fn sample_words(words: &[String], n: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    (0..n).map(|_| words.choose(rng).unwrap().clone()).collect()
}

fn function_words(rng: &mut ChaCha8Rng) -> Vec<String> {
    let n = rng.random_range(0..=2);
    (0..n).map(|_| FUNCTION_WORDS.choose(rng).unwrap().to_string()).collect()
}

fn sentence(words: &[String], rng: &mut ChaCha8Rng) -> String {
    let end = ["。", "！", "", "？"].choose(rng).unwrap();
    format!("{}{}", words.join(" "), end)
}

struct Parent {
    topic: usize,
    topic_words: Vec<String>,
    text: String,
}

fn parent_post(vocab: &Vocab, rng: &mut ChaCha8Rng) -> Parent {
    let topic = rng.random_range(0..vocab.post.len());
    let n = rng.random_range(8..=12);
    let topic_words = sample_words(&vocab.post[topic], n, rng);
    let mut words = topic_words.clone();
    words.extend(function_words(rng));
    words.shuffle(rng);
    let text = sentence(&words, rng);
    Parent { topic, topic_words, text }
}

fn coherent_reply(parent: &Parent, vocab: &Vocab, overlap: f64, rng: &mut ChaCha8Rng) -> String {
    let k = (overlap * parent.topic_words.len() as f64).round() as usize;
    let mut words: Vec<String> = parent
        .topic_words
        .choose_multiple(rng, k)
        .cloned()
        .collect();
    let m = rng.random_range(1..=5);
    words.extend(sample_words(&vocab.reply[parent.topic], m, rng));
    words.extend(function_words(rng));
    words.shuffle(rng);
    sentence(&words, rng)
}

fn zombie_reply(parent: &Parent, vocab: &Vocab, cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> String {
    if rng.random::<f64>() < cfg.zombie_duplicate_rate {
        return parent.text.clone();
    }
    if rng.random::<f64>() < cfg.zombie_emoji_rate {
        let n = rng.random_range(1..=6);
        return (0..n).map(|_| *EMOJI.choose(rng).unwrap()).collect();
    }
    if rng.random::<f64>() < cfg.zombie_vocab_overlap {
        let n_topics = vocab.reply.len();
        let other = (parent.topic + rng.random_range(1..n_topics)) % n_topics;
        let m = rng.random_range(2..=6);
        let mut words = sample_words(&vocab.reply[other], m, rng);
        words.extend(function_words(rng));
        words.shuffle(rng);
        return sentence(&words, rng);
    }
    let n = rng.random_range(3..=8);
    let mut text = (0..n)
        .map(|_| *ZOMBIE_WORDS.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ");
    if rng.random::<bool>() {
        text.push(' ');
        text.push(*EMOJI.choose(rng).unwrap());
    }
    text
}

fn votes_for(label: Label, error_rate: f64, rng: &mut ChaCha8Rng) -> Vec<Vote> {
    let (truth, wrong) = match label {
        Label::Zombie => (Vote::Zombie, Vote::General),
        _ => (Vote::General, Vote::Zombie),
    };
    // resample until the majority agrees with the generating class
    loop {
        let votes: Vec<Vote> = (0..ANNOTATORS)
            .map(|_| if rng.random::<f64>() < error_rate { wrong } else { truth })
            .collect();
        if majority_label(&votes) == label {
            return votes;
        }
    }
}

fn pick_weighted(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

fn hour_weights(peak: f64) -> [f64; 24] {
    let mut w = [0.0; 24];
    for (h, slot) in w.iter_mut().enumerate() {
        let d = (h as f64 - peak).abs();
        let d = d.min(24.0 - d);
        let night = if (2..7).contains(&h) { 0.3 } else { 1.0 };
        *slot = night * (0.25 + (-d * d / (2.0 * 2.5 * 2.5)).exp());
    }
    w
}

/// Reply times fall in the week of 2024-07-11..18 (JST), with class-specific
/// weekday and hour-of-day preferences.
fn reply_time(profile: &ClassProfile, rng: &mut ChaCha8Rng) -> DateTime<Utc> {
    let window_start = chrono::NaiveDate::from_ymd_opt(2024, 7, 11).unwrap();
    let weekday = pick_weighted(&profile.weekday_weights, rng);
    let candidates: Vec<chrono::NaiveDate> = (0..8)
        .map(|i| window_start + Duration::days(i))
        .filter(|d| d.weekday().num_days_from_monday() as usize == weekday)
        .collect();
    let date = *candidates.choose(rng).unwrap();
    let hour = pick_weighted(&hour_weights(profile.peak_hour_jst), rng) as u32;
    let local = date
        .and_hms_opt(hour, rng.random_range(0..60), rng.random_range(0..60))
        .unwrap();
    Utc.from_utc_datetime(&(local - Duration::hours(9)))
}

fn sample_age_days(p: &ClassProfile, rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random();
    if u < p.age_under_500_share {
        rng.random_range(1.0..500.0)
    } else if u < p.age_under_500_share + p.age_over_1800_share {
        rng.random_range(1800.0..6500.0)
    } else {
        rng.random_range(500.0..1800.0)
    }
}

fn lognormal_with_mean(mean: f64, sigma: f64) -> LogNormal<f64> {
    LogNormal::new(mean.ln() - sigma * sigma / 2.0, sigma).expect("validated parameters")
}

fn screen_name(p: &ClassProfile, zombie: bool, rng: &mut ChaCha8Rng) -> String {
    if rng.random::<f64>() < p.latin_name_rate {
        let pool = if zombie { ZOMBIE_NAMES } else { ROMAJI_NAMES };
        let a = pool.choose(rng).unwrap();
        if rng.random::<bool>() {
            let b = pool.choose(rng).unwrap();
            format!("{a}_{b}{}", rng.random_range(1..1000))
        } else {
            format!("{a}{}", rng.random_range(1..10000))
        }
    } else {
        let n = rng.random_range(2..=4);
        (0..n).map(|_| *HIRAGANA.choose(rng).unwrap()).collect()
    }
}

fn profile_text(p: &ClassProfile, zombie: bool, rng: &mut ChaCha8Rng) -> String {
    if rng.random::<f64>() < p.empty_profile_rate {
        return String::new();
    }
    let mut parts: Vec<String> = Vec::new();
    if rng.random::<f64>() < p.japanese_profile_rate {
        let n = rng.random_range(1..=3);
        parts.extend(JP_PROFILE.choose_multiple(rng, n).map(|s| s.to_string()));
    } else {
        let n = rng.random_range(1..=3);
        parts.extend(EN_FILLER.choose_multiple(rng, n).map(|s| s.to_string()));
        if zombie && rng.random::<f64>() < 0.2 {
            parts.push(HINDI_FILLER.choose(rng).unwrap().to_string());
        }
    }
    for (phrase, p_general, p_zombie) in PROFILE_PHRASES {
        let prob = if zombie { *p_zombie } else { *p_general };
        if rng.random::<f64>() < prob {
            parts.push(phrase.to_string());
        }
    }
    parts.shuffle(rng);
    parts.join(" | ")
}

fn account(p: &ClassProfile, label: Label, reference: DateTime<Utc>, rng: &mut ChaCha8Rng) -> AccountRecord {
    let zombie = label == Label::Zombie;
    let age = sample_age_days(p, rng);
    let ppd = lognormal_with_mean(p.posts_per_day_mean, p.posts_per_day_sigma).sample(rng);
    let ratio = if rng.random::<f64>() < p.follow_ratio_near_one_share {
        rng.random_range(0.9..=1.1)
    } else {
        LogNormal::new(p.follow_ratio_log_mu, p.follow_ratio_log_sigma)
            .expect("validated parameters")
            .sample(rng)
    };
    let followers_dist = LogNormal::new(p.followers_median.ln(), p.followers_sigma).expect("validated parameters");
    let followers = if rng.random::<f64>() < p.zero_followers_rate {
        0
    } else {
        followers_dist.sample(rng).round().max(1.0) as u64
    };
    let following = if followers == 0 {
        followers_dist.sample(rng).round() as u64
    } else {
        (ratio * followers as f64).round() as u64
    };
    let created_at = reference - Duration::seconds((age * 86_400.0).round() as i64);
    AccountRecord {
        account_id: String::new(),
        screen_name: screen_name(p, zombie, rng),
        profile_text: profile_text(p, zombie, rng),
        created_at,
        snapshot_at: reference,
        total_posts: (ppd * age).round() as u64,
        followers_count: followers,
        following_count: following,
        verified: rng.random::<f64>() < p.verified_rate,
        label,
    }
}

/// Deterministic for a fixed config: every part draws from its own stream
/// derived from `cfg.seed`.
pub fn synth_generate(cfg: &SynthConfig) -> Result<SynthCorpus, CorpusError> {
    cfg.validate()?;
    let mut vocab_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "synth/vocab"));
    let vocab = build_vocab(cfg.n_topics, &mut vocab_rng);

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "synth/accounts"));
    let mut accounts: Vec<AccountRecord> = Vec::with_capacity(cfg.n_general_accounts + cfg.n_zombie_accounts);
    for _ in 0..cfg.n_general_accounts {
        accounts.push(account(&cfg.general, Label::General, cfg.reference_time, &mut rng));
    }
    for _ in 0..cfg.n_zombie_accounts {
        accounts.push(account(&cfg.zombie, Label::Zombie, cfg.reference_time, &mut rng));
    }
    accounts.shuffle(&mut rng);
    for (i, a) in accounts.iter_mut().enumerate() {
        a.account_id = format!("acct-{i:06}");
    }
    let ids_of = |l: Label| -> Vec<String> {
        accounts
            .iter()
            .filter(|a| a.label == l)
            .map(|a| a.account_id.clone())
            .collect()
    };
    let general_ids = ids_of(Label::General);
    let zombie_ids = ids_of(Label::Zombie);

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "synth/pairs"));
    let mut pairs = Vec::with_capacity(cfg.n_general_pairs + cfg.n_zombie_pairs);
    let classes = [
        (Label::General, cfg.n_general_pairs, &general_ids, &cfg.general),
        (Label::Zombie, cfg.n_zombie_pairs, &zombie_ids, &cfg.zombie),
    ];
    for (label, n, ids, profile) in classes {
        for i in 0..n {
            let parent = parent_post(&vocab, &mut rng);
            let reply_text = match label {
                Label::Zombie => zombie_reply(&parent, &vocab, cfg, &mut rng),
                _ => coherent_reply(&parent, &vocab, cfg.coherence_overlap, &mut rng),
            };
            let reply_author_id = match ids.choose(&mut rng) {
                Some(id) => id.clone(),
                None => format!("ext-{}-{i:06}", label.as_str()),
            };
            pairs.push(ReplyPair {
                pair_id: String::new(),
                parent_author_id: format!("author-{:02}-{:03}", parent.topic, rng.random_range(0..200)),
                parent_text: parent.text,
                reply_text,
                reply_author_id,
                reply_created_at: reply_time(profile, &mut rng),
                label,
                annotator_votes: votes_for(label, cfg.annotator_error_rate, &mut rng),
            });
        }
    }
    pairs.shuffle(&mut rng);
    for (i, p) in pairs.iter_mut().enumerate() {
        p.pair_id = format!("pair-{i:06}");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "synth/clean"));
    let clean_pairs = (0..cfg.n_clean_pairs)
        .map(|i| {
            let parent = parent_post(&vocab, &mut rng);
            let reply_text = coherent_reply(&parent, &vocab, cfg.coherence_overlap, &mut rng);
            CleanPair {
                pair_id: format!("clean-{i:06}"),
                parent_text: parent.text,
                reply_text,
            }
        })
        .collect();

    Ok(SynthCorpus { accounts, pairs, clean_pairs })
}
