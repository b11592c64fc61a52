#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace cfkit {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DuplicateEntry : public Error {
 public:
  DuplicateEntry(int user, int item)
      : Error("duplicate rating for (user=" + std::to_string(user) +
              ", item=" + std::to_string(item) + ")"),
        user(user),
        item(item) {}
  int user;
  int item;
};

class NonFiniteRating : public Error {
 public:
  NonFiniteRating(int user, int item)
      : Error("non-finite rating at (user=" + std::to_string(user) +
              ", item=" + std::to_string(item) + ")") {}
};

class EmptyMatrix : public Error {
 public:
  EmptyMatrix() : Error("operation requires a non-empty ratings matrix") {}
};

class EmptyInput : public Error {
 public:
  explicit EmptyInput(const std::string& what) : Error("empty input: " + what) {}
};

class MalformedLine : public Error {
 public:
  MalformedLine(size_t line_no, const std::string& detail)
      : Error("malformed line " + std::to_string(line_no) + ": " + detail),
        line_no(line_no) {}
  size_t line_no;
};

class UnknownFormat : public Error {
 public:
  explicit UnknownFormat(const std::string& name) : Error("unknown format: " + name) {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& detail)
      : Error("dimension mismatch: " + detail) {}
};

class ZeroVector : public Error {
 public:
  explicit ZeroVector(long long id)
      : Error("zero vector for id " + std::to_string(id)), id(id) {}
  long long id;
};

class MissingEmbeddings : public Error {
 public:
  MissingEmbeddings() : Error("semantic_cosine metric requires an embedding table") {}
};

class Diverged : public Error {
 public:
  Diverged(int epoch, std::vector<double> trace)
      : Error("training objective became non-finite at epoch " + std::to_string(epoch)),
        epoch(epoch),
        objective_trace(std::move(trace)) {}
  int epoch;
  std::vector<double> objective_trace;
};

}  // namespace cfkit
