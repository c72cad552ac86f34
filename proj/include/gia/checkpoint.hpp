#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "gia/nn.hpp"

namespace gia {

// Flat, ordered checkpoint: one record per parameter, written in model walk
// order as (name, shape, float64 little-endian data). Round-trips are
// byte-exact.
struct CheckpointRecord {
    std::string name;
    Shape shape;
    std::vector<double> data;
};

void write_checkpoint(std::ostream& os, const ParamRefs& params);
void save_checkpoint(const std::string& path, const ParamRefs& params);
std::string checkpoint_bytes(const ParamRefs& params);

std::vector<CheckpointRecord> read_checkpoint(std::istream& is);
std::vector<CheckpointRecord> read_checkpoint_file(const std::string& path);

// Copies record data into the matching parameters. Count, order, names and
// shapes must all match; anything else is a ParseError.
void load_checkpoint(std::istream& is, const ParamRefs& params);
void load_checkpoint_file(const std::string& path, const ParamRefs& params);

// Names of records whose payload bytes differ between two checkpoints.
// Record lists must describe the same parameter walk.
std::vector<std::string> diff_checkpoints(const std::vector<CheckpointRecord>& a,
                                          const std::vector<CheckpointRecord>& b);

} // namespace gia
