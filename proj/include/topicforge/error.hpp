#pragma once

#include <stdexcept>
#include <string>

namespace topicforge {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters or preconditions on the caller's side.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent on-disk dataset or artifact.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Model/corpus structure mismatch, e.g. a dynamic model on an unsliced corpus.
class StructureError : public Error {
 public:
  using Error::Error;
};

// Fold-in inference on a document that has nothing in the vocabulary.
class EmptyDocumentError : public Error {
 public:
  using Error::Error;
};

}  // namespace topicforge
