#include "grounding/tensor_io.hpp"

#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "grounding/error.hpp"

namespace grounding {
namespace {

// Host is assumed little-endian (checked once at startup of any IO).
void check_endianness() {
  static const bool little = [] {
    const uint32_t probe = 1;
    unsigned char b[4];
    std::memcpy(b, &probe, 4);
    return b[0] == 1;
  }();
  if (!little) throw Error(ErrorKind::Internal, "big-endian hosts are not supported by the blob format");
}

struct BlobHeader {
  std::string dtype;
  long rows = 0;
  long cols = 0;
  size_t header_bytes = 0;
};

BlobHeader read_header(std::istream& is, const std::string& source_name) {
  std::string line;
  if (!std::getline(is, line)) {
    throw Error(ErrorKind::Parse, source_name + ": missing blob header line");
  }
  std::istringstream hs(line);
  std::string magic;
  BlobHeader h;
  hs >> magic >> h.dtype >> h.rows >> h.cols;
  if (!hs || magic != "tensor") {
    throw Error(ErrorKind::Parse, source_name + ": bad blob header '" + line + "'");
  }
  if (h.rows < 0 || h.cols < 0) {
    throw Error(ErrorKind::Schema, source_name + ": negative blob shape");
  }
  h.header_bytes = line.size() + 1;
  return h;
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> read_payload(std::istream& is, const BlobHeader& h,
                                                                   const std::string& source_name) {
  const size_t want = static_cast<size_t>(h.rows) * static_cast<size_t>(h.cols) * sizeof(Scalar);
  std::vector<char> raw(want);
  is.read(raw.data(), static_cast<std::streamsize>(want));
  const size_t got = static_cast<size_t>(is.gcount());
  if (got != want) {
    throw Error(ErrorKind::Schema,
                source_name + ": truncated blob payload, expected " + std::to_string(want) +
                    " bytes at offset " + std::to_string(h.header_bytes) + ", got " + std::to_string(got));
  }
  // Row-major on disk, Eigen default is column-major in memory.
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m(h.rows, h.cols);
  const Scalar* src = reinterpret_cast<const Scalar*>(raw.data());
  for (long r = 0; r < h.rows; ++r)
    for (long c = 0; c < h.cols; ++c) m(r, c) = src[r * h.cols + c];
  return m;
}

template <typename Scalar>
void write_payload(std::ostream& os, const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& m,
                   const char* dtype) {
  check_endianness();
  os << "tensor " << dtype << ' ' << m.rows() << ' ' << m.cols() << '\n';
  std::vector<Scalar> row(static_cast<size_t>(m.cols()));
  for (long r = 0; r < m.rows(); ++r) {
    for (long c = 0; c < m.cols(); ++c) row[static_cast<size_t>(c)] = m(r, c);
    os.write(reinterpret_cast<const char*>(row.data()),
             static_cast<std::streamsize>(row.size() * sizeof(Scalar)));
  }
  if (!os) throw Error(ErrorKind::Io, "failed writing tensor blob");
}

}  // namespace

void write_blob_f32(std::ostream& os, const Eigen::MatrixXf& m) { write_payload<float>(os, m, "float32"); }
void write_blob_f64(std::ostream& os, const Eigen::MatrixXd& m) { write_payload<double>(os, m, "float64"); }

Eigen::MatrixXf read_blob_f32(std::istream& is, const std::string& source_name) {
  check_endianness();
  const BlobHeader h = read_header(is, source_name);
  if (h.dtype != "float32") {
    throw Error(ErrorKind::Schema, source_name + ": expected dtype float32, found " + h.dtype);
  }
  return read_payload<float>(is, h, source_name);
}

Eigen::MatrixXd read_blob_f64(std::istream& is, const std::string& source_name) {
  check_endianness();
  const BlobHeader h = read_header(is, source_name);
  if (h.dtype != "float64") {
    throw Error(ErrorKind::Schema, source_name + ": expected dtype float64, found " + h.dtype);
  }
  return read_payload<double>(is, h, source_name);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot open file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorKind::Io, "cannot open file for writing: " + path);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error(ErrorKind::Io, "failed writing file: " + path);
}

}  // namespace grounding
