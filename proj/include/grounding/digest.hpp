#ifndef GROUNDING_DIGEST_HPP
#define GROUNDING_DIGEST_HPP

#include <cstdint>
#include <string>

namespace grounding {

// FNV-1a, used for config/dataset digests (integrity tags, not security).
class Fnv1a {
 public:
  void update(const void* data, size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 1099511628211ULL;
    }
  }

  void update(const std::string& s) { update(s.data(), s.size()); }

  uint64_t value() const { return h_; }

  std::string hex() const {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    uint64_t v = h_;
    for (int i = 15; i >= 0; --i) {
      out[i] = digits[v & 0xf];
      v >>= 4;
    }
    return out;
  }

 private:
  uint64_t h_ = 14695981039346656037ULL;
};

inline std::string digest_hex(const std::string& bytes) {
  Fnv1a f;
  f.update(bytes);
  return f.hex();
}

}  // namespace grounding

#endif
