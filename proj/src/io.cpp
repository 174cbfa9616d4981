#include "gcp/io.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace gcp {

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw std::runtime_error(path + ": " + message);
}

[[noreturn]] void fail_line(const std::string& path, std::int64_t line,
                            const std::string& message) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + message);
}

std::vector<std::string> split_tokens(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

std::int64_t parse_int(const std::string& tok, const std::string& path, std::int64_t line) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(tok.c_str(), &end, 10);
  if (errno != 0 || end == tok.c_str() || *end != '\0') {
    fail_line(path, line, "expected an integer, got '" + tok + "'");
  }
  return v;
}

double parse_double(const std::string& tok, const std::string& path, std::int64_t line) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') {
    fail_line(path, line, "expected a number, got '" + tok + "'");
  }
  return v;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) fail(path, "cannot open for writing");
  return out;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) fail(path, "cannot open for reading");
  return in;
}

}  // namespace

SparseTensor read_tns(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  std::int64_t line_no = 0;
  std::vector<std::int64_t> header_dims;
  std::vector<MultiIndex> indices;
  std::vector<double> values;
  std::vector<std::int64_t> maxima;
  int d = -1;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.rfind("#shape:", 0) == 0) {
      const auto tokens = split_tokens(line.substr(7));
      if (tokens.empty()) fail_line(path, line_no, "empty shape header");
      for (const auto& tok : tokens) {
        const std::int64_t n = parse_int(tok, path, line_no);
        if (n < 1) fail_line(path, line_no, "shape extent must be >= 1");
        header_dims.push_back(n);
      }
      d = static_cast<int>(header_dims.size());
      continue;
    }
    const std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;

    const auto tokens = split_tokens(line);
    if (d < 0) {
      if (tokens.size() < 2) fail_line(path, line_no, "expected indices and a value");
      d = static_cast<int>(tokens.size()) - 1;
    }
    if (tokens.size() != static_cast<std::size_t>(d) + 1) {
      fail_line(path, line_no,
                "expected " + std::to_string(d + 1) + " tokens, got " +
                    std::to_string(tokens.size()));
    }
    std::vector<std::int64_t> idx(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) {
      const std::int64_t one_based = parse_int(tokens[static_cast<std::size_t>(k)], path, line_no);
      if (one_based < 1) fail_line(path, line_no, "indices are 1-based, got " +
                                                      std::to_string(one_based));
      if (!header_dims.empty() && one_based > header_dims[static_cast<std::size_t>(k)]) {
        fail_line(path, line_no,
                  "index " + std::to_string(one_based) + " exceeds declared extent " +
                      std::to_string(header_dims[static_cast<std::size_t>(k)]) + " in mode " +
                      std::to_string(k + 1));
      }
      idx[static_cast<std::size_t>(k)] = one_based - 1;
    }
    values.push_back(parse_double(tokens.back(), path, line_no));
    indices.emplace_back(idx);
    if (maxima.size() < idx.size()) maxima.resize(idx.size(), 1);
    for (int k = 0; k < d; ++k) {
      maxima[static_cast<std::size_t>(k)] =
          std::max(maxima[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(k)] + 1);
    }
  }
  if (in.bad()) fail(path, "read error");

  if (header_dims.empty()) {
    if (indices.empty()) fail(path, "no shape header and no entries; shape unknown");
    header_dims = maxima;
  }
  return SparseTensor(Shape(header_dims), indices, values);
}

void write_tns(const SparseTensor& x, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "#shape:";
  for (int k = 0; k < x.ndims(); ++k) out << ' ' << x.shape().dim(k);
  out << '\n';
  for (std::int64_t e = 0; e < x.nnz(); ++e) {
    const auto idx = x.index(e);
    for (int k = 0; k < x.ndims(); ++k) out << idx[static_cast<std::size_t>(k)] + 1 << ' ';
    out << fmt17(x.value(e)) << '\n';
  }
  if (!out) fail(path, "write error");
}

KruskalModel read_model(const std::string& path) {
  std::ifstream in = open_in(path);
  std::int64_t d = 0;
  std::int64_t r = 0;
  if (!(in >> d >> r)) fail(path, "bad header: expected mode count and rank");
  if (d < 1 || r < 1) fail(path, "bad header: mode count and rank must be >= 1");
  std::vector<std::int64_t> dims(static_cast<std::size_t>(d));
  for (auto& n : dims) {
    if (!(in >> n)) fail(path, "bad header: missing extents");
  }
  std::vector<Matrix> factors;
  factors.reserve(static_cast<std::size_t>(d));
  for (std::int64_t k = 0; k < d; ++k) {
    Matrix f(dims[static_cast<std::size_t>(k)], r);
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
      for (Eigen::Index j = 0; j < f.cols(); ++j) {
        std::string tok;
        if (!(in >> tok)) fail(path, "truncated factor data");
        f(i, j) = parse_double(tok, path, 0);
      }
    }
    factors.push_back(std::move(f));
  }
  return KruskalModel(std::move(factors));
}

void write_model(const KruskalModel& model, const std::string& path) {
  std::ofstream out = open_out(path);
  out << model.ndims() << ' ' << model.rank() << '\n';
  for (int k = 0; k < model.ndims(); ++k) {
    out << model.shape().dim(k) << (k + 1 < model.ndims() ? ' ' : '\n');
  }
  for (int k = 0; k < model.ndims(); ++k) {
    const Matrix& f = model.factor(k);
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
      for (Eigen::Index j = 0; j < f.cols(); ++j) {
        out << fmt17(f(i, j)) << (j + 1 < f.cols() ? ' ' : '\n');
      }
    }
  }
  if (!out) fail(path, "write error");
}

DenseTensor read_dense(const std::string& path) {
  const std::string shape_path = path + ".shape";
  std::ifstream shape_in = open_in(shape_path);
  std::vector<std::int64_t> dims;
  std::int64_t n = 0;
  while (shape_in >> n) {
    if (n < 1) fail(shape_path, "shape extent must be >= 1");
    dims.push_back(n);
  }
  if (dims.empty()) fail(shape_path, "empty shape sidecar");

  DenseTensor out{Shape(dims)};
  std::ifstream in = open_in(path, std::ios::binary);
  const std::size_t total = static_cast<std::size_t>(out.shape().total());
  std::vector<unsigned char> bytes(total * 8);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size()) {
    fail(path, "file shorter than the " + std::to_string(bytes.size()) +
                   " bytes implied by its shape sidecar");
  }
  char extra = 0;
  if (in.read(&extra, 1); in.gcount() != 0) {
    fail(path, "file longer than the shape sidecar implies");
  }
  for (std::size_t e = 0; e < total; ++e) {
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) bits = (bits << 8) | bytes[e * 8 + static_cast<std::size_t>(b)];
    double v = 0.0;
    std::memcpy(&v, &bits, sizeof(v));
    out[static_cast<Index128>(e)] = v;
  }
  return out;
}

void write_dense(const DenseTensor& x, const std::string& path) {
  {
    std::ofstream shape_out = open_out(path + ".shape");
    for (int k = 0; k < x.ndims(); ++k) {
      shape_out << x.shape().dim(k) << (k + 1 < x.ndims() ? ' ' : '\n');
    }
    if (!shape_out) fail(path + ".shape", "write error");
  }
  std::ofstream out = open_out(path, std::ios::binary);
  std::vector<unsigned char> bytes;
  bytes.reserve(static_cast<std::size_t>(x.shape().total()) * 8);
  for (double v : x.values()) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof(bits));
    for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<unsigned char>(bits >> (8 * b)));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(path, "write error");
}

void write_trace_csv(const FitTrace& trace, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "epoch,loss_estimate,learning_rate,seconds,accepted\n";
  for (const FitTraceRecord& rec : trace.records) {
    out << rec.epoch << ',' << fmt17(rec.loss_estimate) << ',' << fmt17(rec.learning_rate)
        << ',' << fmt17(rec.seconds) << ',' << (rec.accepted ? 1 : 0) << '\n';
  }
  if (!out) fail(path, "write error");
}

}  // namespace gcp
