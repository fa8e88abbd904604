#include "jointnlu/tensor.hpp"

namespace jointnlu {

Shape::Shape(std::initializer_list<Index> dims) {
  if (dims.size() < 1 || dims.size() > 3) {
    throw ShapeError("tensor rank must be 1..3, got " + std::to_string(dims.size()));
  }
  for (Index d : dims) {
    if (d < 1) throw ShapeError("tensor extents must be at least 1");
    dims_[rank_++] = d;
  }
}

Index Shape::size() const {
  if (rank_ == 0) return 0;
  Index n = 1;
  for (int i = 0; i < rank_; ++i) n *= dims_[i];
  return n;
}

Shape Shape::with_last(Index n) const {
  if (n < 1) throw ShapeError("tensor extents must be at least 1");
  Shape s = *this;
  s.dims_[rank_ - 1] = n;
  return s;
}

std::string Shape::str() const {
  std::string s = "[";
  for (int i = 0; i < rank_; ++i) {
    if (i) s += ",";
    s += std::to_string(dims_[i]);
  }
  return s + "]";
}

}  // namespace jointnlu
