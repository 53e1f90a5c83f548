#pragma once

#include "mhqg/text.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mhqg {

struct GeneratedQuestion {
  std::string question;
  std::string answer;
};

// The neural-capability boundary. Public verbs check the shared contract
// (preconditions raise PreconditionError, malformed replies raise
// ProtocolError) and delegate to the do_* hooks. Implementations must be
// safe to call concurrently.
class Backend {
 public:
  virtual ~Backend() = default;

  std::string gen_question_with_answer(std::string_view context, std::string_view answer) const;
  GeneratedQuestion gen_question_with_entity(std::string_view context, std::string_view entity) const;
  std::string describe_entity(std::string_view flattened_row, std::string_view entity) const;
  std::string fill_mask(std::string_view text_with_mask, EntityType hint) const;
  double perplexity(std::string_view text) const;
  std::string qdmr_to_question(const std::vector<std::string>& steps) const;

 protected:
  virtual std::string do_gen_question_with_answer(std::string_view context, std::string_view answer) const = 0;
  virtual GeneratedQuestion do_gen_question_with_entity(std::string_view context, std::string_view entity) const = 0;
  virtual std::string do_describe_entity(std::string_view flattened_row, std::string_view entity) const = 0;
  virtual std::string do_fill_mask(std::string_view text_with_mask, EntityType hint) const = 0;
  virtual double do_perplexity(std::string_view text) const = 0;
  virtual std::string do_qdmr_to_question(const std::vector<std::string>& steps) const;
};

enum class BackendKind { Stub, Remote };

struct BackendDescriptor {
  BackendKind kind = BackendKind::Stub;
  std::optional<std::string> endpoint;
  int timeout_ms = 30000;
  int retries = 2;
  std::uint64_t seed = 0;

  // Throws ConfigError when an invariant is broken.
  void validate() const;
};

// Deterministic offline stand-in for the model host. Outputs are a pure
// function of (inputs, seed).
class StubBackend final : public Backend {
 public:
  explicit StubBackend(std::uint64_t seed = 0, const EntityTagger& tagger = default_tagger())
      : seed_(seed), tagger_(&tagger) {}

  std::uint64_t seed() const { return seed_; }

 protected:
  std::string do_gen_question_with_answer(std::string_view context, std::string_view answer) const override;
  GeneratedQuestion do_gen_question_with_entity(std::string_view context, std::string_view entity) const override;
  std::string do_describe_entity(std::string_view flattened_row, std::string_view entity) const override;
  std::string do_fill_mask(std::string_view text_with_mask, EntityType hint) const override;
  double do_perplexity(std::string_view text) const override;

 private:
  std::uint64_t seed_;
  const EntityTagger* tagger_;
};

// JSON-over-HTTP client for the model host.
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(BackendDescriptor descriptor);

  const BackendDescriptor& descriptor() const { return desc_; }

 protected:
  std::string do_gen_question_with_answer(std::string_view context, std::string_view answer) const override;
  GeneratedQuestion do_gen_question_with_entity(std::string_view context, std::string_view entity) const override;
  std::string do_describe_entity(std::string_view flattened_row, std::string_view entity) const override;
  std::string do_fill_mask(std::string_view text_with_mask, EntityType hint) const override;
  double do_perplexity(std::string_view text) const override;
  std::string do_qdmr_to_question(const std::vector<std::string>& steps) const override;

 private:
  BackendDescriptor desc_;
  std::string host_;  // scheme://host:port
  std::string path_prefix_;
};

std::unique_ptr<Backend> make_backend(const BackendDescriptor& descriptor, const EntityTagger& tagger = default_tagger());

// Noun used by the stub mask filler: PERSON->person, LOCATION->place,
// DATETIME->year, anything else->one.
std::string_view mask_noun(EntityType t);

// Count of word bigrams that repeat an earlier bigram in the same text.
std::size_t repeated_bigram_count(std::string_view text);

// Number of whitespace-separated words.
std::size_t word_count(std::string_view text);

}  // namespace mhqg
