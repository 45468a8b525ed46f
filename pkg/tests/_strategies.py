"""Hypothesis generators for random formulas and traces, shared across tests.

Generated ASTs stay within the parser's canonical image: ordering atoms are
scalar (vector orderings go through make_atom, which expands them), vector
atoms only use = and !=.
"""

import numpy as np
from hypothesis import strategies as st

from ltldmp import ltl
from ltldmp.ltl import (
    Add,
    Always,
    And,
    Atom,
    Component,
    Eventually,
    Implies,
    Next,
    Norm,
    Not,
    ObjectRef,
    Or,
    ScalarConst,
    Scale,
    SqNorm,
    Sub,
    Trace,
    TrajPos,
    TrajVel,
    Until,
    VecConst,
)


def scalar_terms(schema):
    vec = vector_terms(schema)
    base = st.one_of(
        st.floats(-2.0, 2.0, allow_nan=False).map(ScalarConst),
        vec.map(lambda t: Component(t, 0)),
        vec.map(SqNorm),
        vec.map(Norm),
        st.just(Norm(TrajVel())),
    )
    return st.recursive(
        base,
        lambda inner: st.one_of(
            st.tuples(inner, inner).map(lambda ab: Add(*ab)),
            st.tuples(inner, inner).map(lambda ab: Sub(*ab)),
            st.tuples(st.floats(-2.0, 2.0, allow_nan=False), inner).map(
                lambda ct: Scale(*ct)
            ),
        ),
        max_leaves=4,
    )


def vector_terms(schema):
    base = st.one_of(
        st.just(TrajPos()),
        st.just(TrajVel()),
        st.integers(0, schema.k_objects - 1).map(ObjectRef),
        st.lists(
            st.floats(-2.0, 2.0, allow_nan=False), min_size=schema.d, max_size=schema.d
        ).map(lambda vs: VecConst(tuple(vs))),
    )
    return st.recursive(
        base,
        lambda inner: st.one_of(
            st.tuples(inner, inner).map(lambda ab: Add(*ab)),
            st.tuples(inner, inner).map(lambda ab: Sub(*ab)),
            st.tuples(st.floats(-2.0, 2.0, allow_nan=False), inner).map(
                lambda ct: Scale(*ct)
            ),
        ),
        max_leaves=3,
    )


def atoms(schema):
    scal = scalar_terms(schema)
    vec = vector_terms(schema)
    ordering = st.sampled_from(["<", "<=", ">=", ">"])
    anyop = st.sampled_from(list(ltl.COMPARISONS))
    return st.one_of(
        st.tuples(scal, anyop, scal).map(lambda t: Atom(t[0], t[1], t[2])),
        st.tuples(vec, st.sampled_from(["=", "!="]), vec).map(
            lambda t: Atom(t[0], t[1], t[2])
        ),
        st.tuples(vec, ordering, vec).map(
            lambda t: ltl.make_atom(t[0], t[1], t[2], schema)
        ),
    )


def formulas(schema, with_until=True, with_negation=True, max_leaves=5):
    def extend(inner):
        opts = [
            st.tuples(inner, inner).map(lambda ab: And(*ab)),
            st.tuples(inner, inner).map(lambda ab: Or(*ab)),
            inner.map(Next),
            inner.map(Always),
            inner.map(Eventually),
        ]
        if with_negation:
            opts.append(inner.map(Not))
            opts.append(st.tuples(inner, inner).map(lambda ab: Implies(*ab)))
        if with_until:
            opts.append(st.tuples(inner, inner).map(lambda ab: Until(*ab)))
        return st.one_of(*opts)

    return st.recursive(atoms(schema), extend, max_leaves=max_leaves)


def nnf_formulas(schema, max_leaves=5):
    """Formulas already in negation normal form, until allowed (positively)."""
    neg_atoms = atoms(schema).map(
        lambda a: Not(a) if isinstance(a, Atom) else a
    )

    def extend(inner):
        return st.one_of(
            st.tuples(inner, inner).map(lambda ab: And(*ab)),
            st.tuples(inner, inner).map(lambda ab: Or(*ab)),
            inner.map(Next),
            inner.map(Always),
            inner.map(Eventually),
            st.tuples(inner, inner).map(lambda ab: Until(*ab)),
        )

    return st.recursive(st.one_of(atoms(schema), neg_atoms), extend, max_leaves=max_leaves)


def random_trace(rng, T=8, d=2):
    return Trace(rng.uniform(0.0, 1.0, size=(T, d)), dt=1.0 / (T - 1))
