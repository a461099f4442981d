"""Corner-to-corner geodesics on the hypercube.

Between opposite corners of {0,1}^3 there are d! = 6 directed geodesic
chains; the limit bridge mixes them uniformly and its one-time law factors
as t^d(x,z) (1-t)^d(z,y).  The geodesic structure is never enumerated: all
quantities are dynamic programs on the layered DAG.
"""

from fractions import Fraction

import graphbridge as gb

bits = [format(i, "03b") for i in range(8)]
edges = []
for u in bits:
    for i in range(3):
        v = u[:i] + ("1" if u[i] == "0" else "0") + u[i + 1 :]
        if u < v:
            edges.append((u, v))
graph = gb.Graph(bits, edges)
metric = gb.intrinsic_distance(graph)
kernel, m = gb.build_simple_walk(graph)

x, y = graph.index["000"], graph.index["111"]
dag = gb.geodesic_dag(x, y, graph, metric)
stats = gb.chain_statistics(dag)
print(f"DAG: {len(dag.nodes)} states, {dag.edge_count} transitions, "
      f"{stats.count} chains of {stats.max_length} jumps")

fields = gb.bridge_fields(x, y, graph, metric, kernel)
t = Fraction(2, 5)
law = gb.bridge_marginal_exact(fields, t)
print(f"\nbridge law at t={t} (product form t^d_in (1-t)^d_out):")
for z, mass in enumerate(law):
    print(f"  {bits[z]}: {str(mass):>8}   d(x,z)={metric.d(x, z)}")

print("\nendpoint mass table row from 000 (degree * (1/3)^distance):")
endpoint = gb.geodesic_endpoint_measure(graph, metric, kernel, m)
print("  " + "  ".join(f"{bits[z]}:{str(endpoint.table[x][z]):>5}" for z in range(8)))
