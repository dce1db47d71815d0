#pragma once

#include "forge/signature.hpp"
#include "forge/structure.hpp"

#include <memory>
#include <string>
#include <vector>

namespace forge {

struct Variable {
    std::string name;
    int sort = 0;
    bool operator==(const Variable&) const = default;
};

// A variable occurrence or an embedded element parameter.
struct Term {
    enum class Kind { variable, parameter };
    Kind kind = Kind::variable;
    std::string name; // variables only
    int sort = 0;
    int id = 0; // parameters only

    static Term var(const Variable& v) { return {Kind::variable, v.name, v.sort, 0}; }
    static Term param(const Elem& e) { return {Kind::parameter, {}, e.sort, e.id}; }
    [[nodiscard]] bool is_var() const { return kind == Kind::variable; }
    [[nodiscard]] Variable variable() const { return {name, sort}; }
    [[nodiscard]] Elem element() const { return {sort, id}; }
    bool operator==(const Term&) const = default;
};

enum class Op { truth, falsity, atom, equal, in_h, negation, conjunction, disjunction, implication, exists, forall };

// Immutable first-order formula. Conjunction and disjunction are n-ary (n >= 2 when
// built by the parser; the builders collapse 0/1-ary cases).
class Formula {
public:
    Formula(); // truth

    static Formula truth();
    static Formula falsity();
    static Formula atom(int rel, std::vector<Term> args);
    static Formula equal(Term a, Term b);
    static Formula in_h(Term t);
    static Formula negation(Formula f);
    static Formula conjunction(std::vector<Formula> parts);
    static Formula disjunction(std::vector<Formula> parts);
    static Formula implication(Formula lhs, Formula rhs);
    static Formula exists(Variable v, Formula body);
    static Formula forall(Variable v, Formula body);
    // Raw n-ary node without collapsing (used by the parser).
    static Formula nary(Op op, std::vector<Formula> parts);

    [[nodiscard]] Op op() const { return node_->op; }
    [[nodiscard]] int relation() const { return node_->rel; }
    [[nodiscard]] const std::vector<Term>& terms() const { return node_->terms; }
    [[nodiscard]] const std::vector<Formula>& children() const { return node_->kids; }
    [[nodiscard]] const Variable& bound() const { return node_->bound; }

    bool operator==(const Formula& other) const;

private:
    struct Node {
        Op op = Op::truth;
        int rel = -1;
        std::vector<Term> terms;
        std::vector<Formula> kids;
        Variable bound;
    };
    explicit Formula(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    static Formula make(Node n);

    std::shared_ptr<const Node> node_;
};

// Free variables in order of first occurrence.
[[nodiscard]] std::vector<Variable> free_variables(const Formula& f);
[[nodiscard]] bool mentions_h(const Formula& f);
[[nodiscard]] std::vector<Elem> parameters(const Formula& f);
// Renames free occurrences of variables per `renaming` (pairs old name -> new variable).
[[nodiscard]] Formula rename_free(const Formula& f, const std::vector<std::pair<std::string, Variable>>& renaming);
// Replaces free occurrences of variables with parameters.
[[nodiscard]] Formula substitute(const Formula& f, const std::vector<std::pair<std::string, Elem>>& values);
// Sorts must match the signature profile; throws ParseError naming the atom otherwise.
void check_well_sorted(const Formula& f, const Signature& sig);

// A formula with a designated object variable x and ordered parameter variables ȳ.
struct PartitionedFormula {
    Formula body;
    Variable x;
    std::vector<Variable> params;

    // Free variables of `body` other than x, in order of first occurrence, become the
    // parameters. The by-name overload requires x to occur free.
    static PartitionedFormula from(Formula body, Variable x);
    static PartitionedFormula from(Formula body, const std::string& x_name);
    [[nodiscard]] std::vector<int> param_profile() const;
};

// Set of formulas sharing the free variable tuple (here: a single variable x).
struct FormulaSet {
    Variable x;
    std::vector<Formula> members;
};

} // namespace forge
