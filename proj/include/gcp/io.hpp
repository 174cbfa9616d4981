#pragma once

#include <string>

#include "gcp/kruskal.hpp"
#include "gcp/optimizer.hpp"
#include "gcp/tensor.hpp"

namespace gcp {

/// Coordinate text format: one nonzero per line as d 1-based indices and a
/// value, '#' comment lines, and an optional '#shape: n1 ... nd' header.
/// Without the header the shape is the per-mode index maxima. Written files
/// always carry the header so empty tensors round-trip.
SparseTensor read_tns(const std::string& path);
void write_tns(const SparseTensor& x, const std::string& path);

/// Factor matrices as text: a 'd r' line, a dims line, then each factor
/// row by row. Floats print with 17 significant digits, so write then read
/// reproduces every bit.
KruskalModel read_model(const std::string& path);
void write_model(const KruskalModel& model, const std::string& path);

/// Raw little-endian 64-bit floats in first-mode-fastest order, with the
/// shape in a text sidecar at path + ".shape".
DenseTensor read_dense(const std::string& path);
void write_dense(const DenseTensor& x, const std::string& path);

/// Columns: epoch, loss_estimate, learning_rate, seconds, accepted (1/0).
void write_trace_csv(const FitTrace& trace, const std::string& path);

}  // namespace gcp
