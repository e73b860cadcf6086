// Walkthrough: build a small analogy corpus from inflection triples, then
// solve equations with the two symbolic solvers and inspect their rankings.

#include <iostream>
#include <sstream>

#include "mann/data.hpp"
#include "mann/solve/kolmo.hpp"
#include "mann/solve/ranking.hpp"
#include "mann/solve/symbolic.hpp"

using mann::word_to_utf8;

int main() {
  std::istringstream triples(
      "cat\tN;PL\tcats\n"
      "animal\tN;PL\tanimals\n"
      "walk\tV;PST\twalked\n"
      "talk\tV;PST\ttalked\n"
      "jump\tV;PST\tjumped\n");
  mann::ParseResult parsed =
      mann::parse_inflection_stream(triples, mann::ColumnOrder::kLemmaFeaturesForm, true);
  std::vector<mann::AnalogyQuadruple> corpus =
      mann::dedup_analogies(mann::build_analogy_corpus(parsed.triples));

  std::cout << "corpus of " << corpus.size() << " quadruples, e.g.\n";
  for (std::size_t i = 0; i < corpus.size() && i < 3; ++i)
    std::cout << "  " << mann::serialize_quadruple(corpus[i]) << "\n";

  mann::AnalogyEquation eq{mann::utf8_to_word("cat"), mann::utf8_to_word("cats"),
                           mann::utf8_to_word("animal")};
  std::cout << "\ncat : cats :: animal : ?\n";

  mann::Rng rng(0);
  mann::SolverRanking alea =
      mann::solve_alea(eq, mann::AleaConfig{}, rng, mann::Deadline::unlimited());
  std::cout << "  sampling solver:   ";
  for (std::size_t i = 0; i < alea.candidates.size() && i < 3; ++i)
    std::cout << (i ? ", " : "") << word_to_utf8(alea.candidates[i]);
  std::cout << "\n";

  mann::SolverRanking kolmo =
      mann::solve_kolmo(eq, mann::KolmoConfig{}, mann::Deadline::unlimited());
  std::cout << "  edit-program solver:";
  for (std::size_t i = 0; i < kolmo.candidates.size() && i < 3; ++i)
    std::cout << (i ? ", " : " ") << word_to_utf8(kolmo.candidates[i]);
  std::cout << "\n";

  mann::AnalogyEquation verbs{mann::utf8_to_word("walk"), mann::utf8_to_word("walked"),
                              mann::utf8_to_word("talk")};
  mann::SolverRanking past =
      mann::solve_kolmo(verbs, mann::KolmoConfig{}, mann::Deadline::unlimited());
  std::cout << "\nwalk : walked :: talk : "
            << (past.candidates.empty() ? std::string("?") : word_to_utf8(past.candidates[0]))
            << "\n";
  return 0;
}
