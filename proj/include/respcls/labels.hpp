#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>

namespace respcls {

// [normal, crackle, wheeze] pathology bits. An original cycle carries exactly
// one of the four one/two-hot patterns; an OR-combined sample may carry any
// pattern with at least one set bit. The all-zero vector labels nothing.
struct Label3 {
  std::uint8_t normal = 0;
  std::uint8_t crackle = 0;
  std::uint8_t wheeze = 0;

  friend bool operator==(const Label3&, const Label3&) = default;

  int bits() const { return (normal << 2) | (crackle << 1) | wheeze; }
  bool any() const { return normal || crackle || wheeze; }

  bool is_legal_original() const {
    if (normal) return !crackle && !wheeze;
    return crackle || wheeze;
  }
  bool is_legal_augmented() const { return any(); }
};

// [crackle, wheeze]; normal is the implicit all-zero pattern.
struct Label2 {
  std::uint8_t crackle = 0;
  std::uint8_t wheeze = 0;

  friend bool operator==(const Label2&, const Label2&) = default;
};

enum class IcbhiClass : int { Normal = 0, Crackle = 1, Wheeze = 2, Both = 3 };

inline constexpr std::array<IcbhiClass, 4> kIcbhiClasses = {
    IcbhiClass::Normal, IcbhiClass::Crackle, IcbhiClass::Wheeze,
    IcbhiClass::Both};

const char* to_string(IcbhiClass c);

// Componentwise max of the two bit vectors.
Label3 label3_or(const Label3& a, const Label3& b);

// Drops the normal bit.
Label2 label3_to_label2(const Label3& y);

// Priority rule over a binarized prediction vector: crackle and wheeze
// together map to Both, then either alone, else Normal. The normal bit is
// never consulted, so [0,0,0] maps to Normal.
IcbhiClass to_icbhi_class(const Label3& prediction);

// normal = 1 iff both annotation bits are 0.
Label3 label3_from_annotation_bits(int crackle, int wheeze);

// The one/two-hot original-cycle pattern for a class.
Label3 label3_from_class(IcbhiClass c);

// "n,c,w" digits, the manifest serialization.
std::string label3_to_csv(const Label3& y);
Label3 label3_from_csv(const std::string& text);

// Opaque non-empty patient token; equality is exact token equality.
struct PatientId {
  std::string id;

  PatientId() = default;
  explicit PatientId(std::string s);

  friend bool operator==(const PatientId&, const PatientId&) = default;
  friend std::strong_ordering operator<=>(const PatientId& a,
                                          const PatientId& b) {
    return a.id.compare(b.id) <=> 0;
  }
};

}  // namespace respcls
