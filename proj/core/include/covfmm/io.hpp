#pragma once

#include <string>

#include "covfmm/box_tree.hpp"
#include "covfmm/errors.hpp"
#include "covfmm/types.hpp"

namespace covfmm {

// shortest decimal form that parses back to the identical double
std::string format_double(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// one value per line, no header
void save_vector_csv(const Vector& v, const std::string& path);
Vector load_vector_csv(const std::string& path);

// header "index,lat_deg,lon_deg"; indices are dense and ascending from 0
void save_observations_csv(const ObservationSet& obs, const std::string& path);
ObservationSet load_observations_csv(const std::string& path);

}  // namespace covfmm
