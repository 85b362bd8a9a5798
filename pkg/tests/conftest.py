from graphmdl.graph import Edge, Graph, Node
from graphmdl.io import SampleSet

# acceptance lines collected during the run, echoed in the terminal summary
CRITERIA: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(CRITERIA):
        terminalreporter.write_line(CRITERIA[k])


def g(contents, edges=(), types=None, etypes=None, spans=None, meta=None):
    """Graph from a list of contents and (head_index, tail_index) pairs."""
    nodes = [Node(i, c, (types or {}).get(i, ""), (spans or {}).get(i)) for i, c in enumerate(contents)]
    es = [Edge(h, t, (etypes or {}).get((h, t), "")) for h, t in edges]
    return Graph(nodes, es, meta or {})


def samples(*graphs):
    return SampleSet(list(graphs))
