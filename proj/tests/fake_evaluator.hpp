#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "anon_enigma/saturation.hpp"

namespace support {

struct WeighCall {
  std::vector<anon_enigma::ClauseId> queries;
  std::size_t context = 0;
};

/// Evaluator backed by a plain function; records every weigh() call.
class FakeEvaluator : public anon_enigma::ClauseEvaluator {
 public:
  using Fn = std::function<double(const anon_enigma::Clause&)>;

  explicit FakeEvaluator(Fn fn, std::size_t query = 1, std::size_t context = 0)
      : fn_(std::move(fn)), query_(query), context_(context),
        calls_(std::make_shared<std::vector<WeighCall>>()) {}

  std::string name() const override { return "fake"; }
  std::unique_ptr<anon_enigma::EvaluationSession> open(const anon_enigma::Problem&) const override {
    return std::make_unique<Session>(*this);
  }
  const std::vector<WeighCall>& calls() const { return *calls_; }

 private:
  class Session : public anon_enigma::EvaluationSession {
   public:
    explicit Session(const FakeEvaluator& e) : e_(e) {}
    std::size_t query_size() const override { return e_.query_; }
    std::size_t context_size() const override { return e_.context_; }
    std::vector<double> weigh(std::span<const anon_enigma::Clause* const> queries,
                              std::span<const anon_enigma::Clause* const> context) override {
      WeighCall call;
      call.context = context.size();
      std::vector<double> out;
      for (const auto* q : queries) {
        call.queries.push_back(q->id);
        out.push_back(e_.fn_(*q));
      }
      e_.calls_->push_back(std::move(call));
      return out;
    }

   private:
    const FakeEvaluator& e_;
  };

  Fn fn_;
  std::size_t query_, context_;
  std::shared_ptr<std::vector<WeighCall>> calls_;
};

}  // namespace support
