#include "respcls/labels.hpp"

#include <algorithm>
#include <stdexcept>

namespace respcls {

const char* to_string(IcbhiClass c) {
  switch (c) {
    case IcbhiClass::Normal:
      return "normal";
    case IcbhiClass::Crackle:
      return "crackle";
    case IcbhiClass::Wheeze:
      return "wheeze";
    case IcbhiClass::Both:
      return "both";
  }
  return "?";
}

Label3 label3_or(const Label3& a, const Label3& b) {
  return Label3{std::max(a.normal, b.normal), std::max(a.crackle, b.crackle),
                std::max(a.wheeze, b.wheeze)};
}

Label2 label3_to_label2(const Label3& y) { return Label2{y.crackle, y.wheeze}; }

IcbhiClass to_icbhi_class(const Label3& prediction) {
  if (prediction.crackle && prediction.wheeze) return IcbhiClass::Both;
  if (prediction.crackle) return IcbhiClass::Crackle;
  if (prediction.wheeze) return IcbhiClass::Wheeze;
  return IcbhiClass::Normal;
}

Label3 label3_from_annotation_bits(int crackle, int wheeze) {
  if ((crackle != 0 && crackle != 1) || (wheeze != 0 && wheeze != 1)) {
    throw std::invalid_argument("annotation bits must be 0 or 1");
  }
  Label3 y;
  y.crackle = static_cast<std::uint8_t>(crackle);
  y.wheeze = static_cast<std::uint8_t>(wheeze);
  y.normal = (crackle == 0 && wheeze == 0) ? 1 : 0;
  return y;
}

Label3 label3_from_class(IcbhiClass c) {
  switch (c) {
    case IcbhiClass::Normal:
      return Label3{1, 0, 0};
    case IcbhiClass::Crackle:
      return Label3{0, 1, 0};
    case IcbhiClass::Wheeze:
      return Label3{0, 0, 1};
    case IcbhiClass::Both:
      return Label3{0, 1, 1};
  }
  throw std::invalid_argument("bad class");
}

std::string label3_to_csv(const Label3& y) {
  std::string s;
  s += y.normal ? '1' : '0';
  s += ',';
  s += y.crackle ? '1' : '0';
  s += ',';
  s += y.wheeze ? '1' : '0';
  return s;
}

Label3 label3_from_csv(const std::string& text) {
  if (text.size() != 5 || text[1] != ',' || text[3] != ',') {
    throw std::invalid_argument("label must be three comma-separated bits: " +
                                text);
  }
  auto bit = [&](char c) -> std::uint8_t {
    if (c == '0') return 0;
    if (c == '1') return 1;
    throw std::invalid_argument("label bit must be 0 or 1: " + text);
  };
  return Label3{bit(text[0]), bit(text[2]), bit(text[4])};
}

PatientId::PatientId(std::string s) : id(std::move(s)) {
  if (id.empty()) throw std::invalid_argument("patient id must be non-empty");
}

}  // namespace respcls
