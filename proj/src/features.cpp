#include "jointnlu/features.hpp"

#include <algorithm>
#include <cwctype>
#include <locale>

#include "jointnlu/error.hpp"
#include "jointnlu/utf8.hpp"

namespace jointnlu {

namespace utf8 {

std::u32string decode(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const auto b0 = static_cast<unsigned char>(text[i]);
    int extra = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      extra = 1;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      extra = 2;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      extra = 3;
      cp = b0 & 0x07;
    } else {
      out.push_back(U'�');
      ++i;
      continue;
    }
    if (i + extra >= text.size()) {
      out.push_back(U'�');
      ++i;
      continue;
    }
    bool ok = true;
    for (int k = 1; k <= extra; ++k) {
      const auto b = static_cast<unsigned char>(text[i + k]);
      if ((b & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (b & 0x3F);
    }
    if (!ok) {
      out.push_back(U'�');
      ++i;
      continue;
    }
    out.push_back(cp);
    i += extra + 1;
  }
  return out;
}

std::string encode(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
  return out;
}

std::vector<std::string> split_code_points(std::string_view text) {
  std::vector<std::string> out;
  for (char32_t cp : decode(text)) out.push_back(encode(cp));
  return out;
}

}  // namespace utf8

namespace {

// Classification uses the C.UTF-8 ctype tables when the runtime provides
// them, otherwise the classic (ASCII-only) locale.
const std::locale& classification_locale() {
  static const std::locale loc = [] {
    try {
      return std::locale("C.UTF-8");
    } catch (const std::runtime_error&) {
      return std::locale::classic();
    }
  }();
  return loc;
}

}  // namespace

CharEncoding char_encode(std::string_view token, const Vocabularies& vocab,
                         int max_char_len) {
  if (max_char_len < 1) throw Error("max_char_len must be at least 1");
  CharEncoding enc;
  enc.ids.assign(static_cast<std::size_t>(max_char_len), kPadIndex);
  const std::u32string cps = utf8::decode(token);
  const int n = std::min<int>(max_char_len, static_cast<int>(cps.size()));
  for (int i = 0; i < n; ++i) enc.ids[i] = vocab.char_id(utf8::encode(cps[i]));
  enc.true_len = n;
  return enc;
}

WordFlags word_flags(std::string_view token) {
  const std::locale& loc = classification_locale();
  const auto& ct = std::use_facet<std::ctype<wchar_t>>(loc);
  const std::u32string cps = utf8::decode(token);

  auto is = [&](std::ctype_base::mask m, char32_t c) {
    return ct.is(m, static_cast<wchar_t>(c));
  };
  auto digit = [&](char32_t c) { return is(std::ctype_base::digit, c); };
  auto lower = [&](char32_t c) { return is(std::ctype_base::lower, c); };
  auto upper = [&](char32_t c) { return is(std::ctype_base::upper, c); };
  auto alpha = [&](char32_t c) { return is(std::ctype_base::alpha, c); };
  auto punct = [&](char32_t c) { return is(std::ctype_base::punct, c); };

  WordFlags f;
  if (cps.empty()) return f;
  f.values[WordFlags::kNumeric] = std::all_of(cps.begin(), cps.end(), digit);
  f.values[WordFlags::kStartsLower] = lower(cps.front());
  f.values[WordFlags::kStartsUpper] =
      upper(cps.front()) && !f.values[WordFlags::kStartsLower];
  f.values[WordFlags::kAllUpper] =
      std::all_of(cps.begin(), cps.end(),
                  [&](char32_t c) { return alpha(c) && upper(c); });
  f.values[WordFlags::kContainsDigit] = std::any_of(cps.begin(), cps.end(), digit);
  f.values[WordFlags::kContainsPunct] = std::any_of(cps.begin(), cps.end(), punct);
  return f;
}

}  // namespace jointnlu
