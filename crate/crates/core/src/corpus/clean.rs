use unicode_properties::{GeneralCategoryGroup, UnicodeGeneralCategory};

/// Lowercases, deletes every Unicode punctuation character (apostrophes and
/// hyphens included, so "don't" becomes "dont"), and splits on whitespace.
pub fn clean_and_tokenize(text: &str) -> Vec<String> {
    let cleaned: String = text
        .chars()
        .filter(|c| c.general_category_group() != GeneralCategoryGroup::Punctuation)
        .flat_map(char::to_lowercase)
        .collect();
    cleaned.split_whitespace().map(str::to_string).collect()
}
