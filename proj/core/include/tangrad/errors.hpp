#pragma once

#include <stdexcept>
#include <string>

namespace tangrad {

// Base of all library errors. The three subcategories map onto the CLI's
// exit codes: ConfigError -> 2, DataError -> 3, NumericError -> 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

// -- configuration ----------------------------------------------------------
struct InvalidBounds final : ConfigError { using ConfigError::ConfigError; };
struct InvalidSpec final : ConfigError { using ConfigError::ConfigError; };
struct DimensionCapExceeded final : ConfigError { using ConfigError::ConfigError; };
struct EmptySelection final : ConfigError { using ConfigError::ConfigError; };

// -- data / file formats -----------------------------------------------------
struct BadMagic final : DataError { using DataError::DataError; };
struct TruncatedFile final : DataError { using DataError::DataError; };
struct CountMismatch final : DataError { using DataError::DataError; };
struct FileFormatError final : DataError { using DataError::DataError; };
struct EmptyDataset final : DataError { using DataError::DataError; };
struct NotDivisible final : DataError { using DataError::DataError; };
struct NotAnImage final : DataError { using DataError::DataError; };

// -- numerics ----------------------------------------------------------------
struct DimensionMismatch final : NumericError { using NumericError::NumericError; };
struct AllColumnsDegenerate final : NumericError { using NumericError::NumericError; };
struct FullRankInput final : NumericError { using NumericError::NumericError; };
struct DegenerateJacobian final : NumericError { using NumericError::NumericError; };
struct ZeroVector final : NumericError { using NumericError::NumericError; };
struct DivergedLoss final : NumericError { using NumericError::NumericError; };
struct DegeneratePath final : NumericError { using NumericError::NumericError; };
struct NonFiniteEnergy final : NumericError { using NumericError::NumericError; };
struct InitTooCloseToInput final : NumericError { using NumericError::NumericError; };
struct NotSymmetric final : NumericError { using NumericError::NumericError; };
struct NotABasis final : NumericError { using NumericError::NumericError; };

}  // namespace tangrad
