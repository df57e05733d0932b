// field_io.hpp — serialization of states.
//
// Binary layout (little-endian, documented here and in the README):
//   bytes 0..3   magic "GWF1"
//   u32          m_grid
//   u32          K (reservoir count)
//   f64 x 2*(2*m_grid+1)   phi_hat interleaved re,im for k = -m..m
//   f64 x 2*(2*m_grid+1)   pi_hat  interleaved re,im for k = -m..m
//   f64 x K                r
// One record per state; files may concatenate records back to back.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "gw/fourier_field.hpp"

#include "json.hpp"

namespace gw {

void write_state_binary(std::ostream& os, const SystemState& state);
SystemState read_state_binary(std::istream& is);

nlohmann::json state_to_json(const SystemState& state);
SystemState state_from_json(const nlohmann::json& j);

// Sample dump: <dir>/samples.bin (records) + <dir>/manifest.json.
void write_sample_dump(const std::string& directory,
                       const std::vector<SystemState>& states,
                       const nlohmann::json& manifest_extra);
std::vector<SystemState> read_sample_dump(const std::string& directory);

} // namespace gw
