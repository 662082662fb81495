#pragma once

#include <iosfwd>
#include <string>

#include "akpz/fourier_field.hpp"

namespace akpz {

// Binary field checkpoint, layout version 1:
//   magic "AKPZFLD1" (8 bytes), u32 layout version, i32 cutoff M,
//   f64 zero mode, then 2*M*(M+1) little-endian (re, im) f64 pairs in
//   half-lattice enumeration order.
void write_field_binary(std::ostream& os, const FourierField& f);
FourierField read_field_binary(std::istream& is);
void save_field(const std::string& path, const FourierField& f);
FourierField load_field(const std::string& path);

// JSON form for small cutoffs; nonzero canonical coefficients only.
std::string field_to_json(const FourierField& f);
FourierField field_from_json(const std::string& json);

}  // namespace akpz
