#ifndef GROUNDING_TENSOR_IO_HPP
#define GROUNDING_TENSOR_IO_HPP

#include <Eigen/Core>
#include <iosfwd>
#include <string>

namespace grounding {

// Tensor blobs: one text header line "tensor <dtype> <rows> <cols>\n"
// followed by row-major little-endian raw bytes. dtype is float32 for
// dataset features and float64 for model parameters.

void write_blob_f32(std::ostream& os, const Eigen::MatrixXf& m);
void write_blob_f64(std::ostream& os, const Eigen::MatrixXd& m);

// Throws Error{Parse|Schema} with byte offsets on malformed or truncated input.
Eigen::MatrixXf read_blob_f32(std::istream& is, const std::string& source_name);
Eigen::MatrixXd read_blob_f64(std::istream& is, const std::string& source_name);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

}  // namespace grounding

#endif
