from fractions import Fraction

from hypothesis import strategies as st

from fairdiv.core import Allocation, Instance


@st.composite
def instances(draw, max_agents=5, max_goods=6, zero_weight=2):
    n = draw(st.integers(1, max_agents))
    m = draw(st.integers(0, max_goods))
    value = st.one_of(
        st.just(Fraction(0)),
        st.integers(1, 12).map(Fraction),
        st.tuples(st.integers(1, 12), st.integers(1, 4)).map(lambda t: Fraction(*t)),
    )
    rows = [[draw(value) for _ in range(m)] for _ in range(n)]
    return Instance.from_table(rows) if n else Instance(0, m, ())


@st.composite
def restricted_instances(draw, max_agents=5, max_goods=6, max_relevant=None):
    n = draw(st.integers(1, max_agents))
    m = draw(st.integers(0, max_goods))
    top = n if max_relevant is None else min(n, max_relevant)
    rows = [[Fraction(0)] * m for _ in range(n)]
    for g in range(m):
        v = Fraction(draw(st.integers(1, 15)))
        who = draw(st.sets(st.integers(0, n - 1), min_size=1, max_size=top))
        for a in who:
            rows[a][g] = v
    return Instance.from_table(rows)


@st.composite
def allocations(draw, inst, complete=False):
    top = inst.num_agents - 1 if complete else inst.num_agents
    owners = [draw(st.integers(0, top)) for _ in range(inst.num_goods)]
    bundles = [frozenset(g for g, o in enumerate(owners) if o == a) for a in range(inst.num_agents)]
    pool = frozenset(g for g, o in enumerate(owners) if o == inst.num_agents)
    return Allocation(pool, tuple(bundles))


@st.composite
def instance_and_allocation(draw, complete=False, **kw):
    inst = draw(instances(**kw))
    return inst, draw(allocations(inst, complete))


@st.composite
def positive_cases(draw, max_agents=5, max_goods=6, restricted=False):
    """Instance and complete allocation where every agent values its own
    bundle: agent i always values good i and receives it."""
    n = draw(st.integers(1, max_agents))
    m = draw(st.integers(n, max(n, max_goods)))
    base = draw(instances(max_agents=n, max_goods=m) if not restricted else restricted_instances(n, m))
    rows = [[Fraction(0)] * m for _ in range(n)]
    for a in range(min(n, base.num_agents)):
        for g in range(min(m, base.num_goods)):
            rows[a][g] = base.values[a][g]
    for i in range(n):
        if rows[i][i] == 0:
            v = Fraction(draw(st.integers(1, 12)))
            if restricted:
                # Keep one inherent value per good.
                v = next((r[i] for r in rows if r[i]), v)
            rows[i][i] = v
    inst = Instance.from_table(rows)
    owners = list(range(n)) + [draw(st.integers(0, n - 1)) for _ in range(m - n)]
    bundles = tuple(frozenset(g for g, o in enumerate(owners) if o == a) for a in range(n))
    return inst, Allocation(frozenset(), bundles)
