"""Small graph helpers over integer-indexed adjacency lists."""

from collections import deque


def tarjan_scc(num_nodes, succ, roots=None):
    """Strongly connected components reachable from `roots`.

    `succ[v]` is an iterable of successors. Components come out in reverse
    topological order (a component is emitted after everything it reaches).
    Iterative, so deep graphs do not hit the recursion limit.
    """
    index = [-1] * num_nodes
    low = [0] * num_nodes
    on_stack = [False] * num_nodes
    stack = []
    comps = []
    counter = 0
    if roots is None:
        roots = range(num_nodes)
    for root in roots:
        if index[root] != -1:
            continue
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        work = [(root, iter(succ[root]))]
        while work:
            v, it = work[-1]
            pushed = False
            for w in it:
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, iter(succ[w])))
                    pushed = True
                    break
                if on_stack[w] and index[w] < low[v]:
                    low[v] = index[w]
            if pushed:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                if low[v] < low[u]:
                    low[u] = low[v]
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(comp)
    return comps


def is_nontrivial(comp, succ):
    """True if the component contains a cycle (two nodes or a self-loop)."""
    if len(comp) > 1:
        return True
    v = comp[0]
    return v in succ[v]


def reachable(num_nodes, succ, sources):
    seen = [False] * num_nodes
    queue = deque()
    for s in sources:
        if not seen[s]:
            seen[s] = True
            queue.append(s)
    while queue:
        v = queue.popleft()
        for w in succ[v]:
            if not seen[w]:
                seen[w] = True
                queue.append(w)
    return seen


def reverse(num_nodes, succ):
    pred = [[] for _ in range(num_nodes)]
    for v in range(num_nodes):
        for w in succ[v]:
            pred[w].append(v)
    return pred
