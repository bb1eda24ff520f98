#!/usr/bin/env python3
"""Regenerate the bundled two-/four-qubit molecular coefficient tables.

Integrals come from PySCF (RHF, STO-3G). The fermionic Hamiltonian is reduced
with OpenFermion's symmetry-conserving Bravyi-Kitaev transform, which removes
two qubits using particle-number and spin-parity symmetry. For H2 and HeH+ the
second qubit is then relabelled (conjugated by X) so the Hartree-Fock
configuration reads |10>. Reference energies are FCI (H2, HeH+) or CASCI over the
three sigma-type valence orbitals with a frozen Li 1s core (LiH).

Usage: python3 tools/gen_coefficients.py data/
"""

import sys
from pathlib import Path

import numpy as np
import openfermion as of
import pyscf
from pyscf import ao2mo, fci, gto, mcscf, scf

H2_TEMPLATE = ["II", "IZ", "ZI", "ZZ", "XX"]
HEH_TEMPLATE = ["II", "IZ", "ZI", "ZZ", "XX", "IX", "ZX", "XI", "XZ"]


def interaction_operator(mol, mf, core, active):
    c = mf.mo_coeff
    h1 = c.T @ mf.get_hcore() @ c
    eri = ao2mo.restore(1, ao2mo.kernel(mol, c), c.shape[1])
    e0 = mol.energy_nuc()
    for i in core:
        e0 += 2 * h1[i, i]
        for j in core:
            e0 += 2 * eri[i, i, j, j] - eri[i, j, j, i]
    h = h1[np.ix_(active, active)].copy()
    for i in core:
        h += 2 * eri[np.ix_(active, active, [i], [i])][:, :, 0, 0]
        h -= eri[np.ix_(active, [i], [i], active)][:, 0, 0, :]
    g = eri[np.ix_(active, active, active, active)]
    n = len(active)
    one = np.zeros((2 * n, 2 * n))
    two = np.zeros((2 * n,) * 4)
    for p in range(n):
        for q in range(n):
            for s in range(2):
                one[2 * p + s, 2 * q + s] = h[p, q]
    for p in range(n):
        for q in range(n):
            for r in range(n):
                for t in range(n):
                    for s1 in range(2):
                        for s2 in range(2):
                            two[2 * p + s1, 2 * q + s2, 2 * r + s2, 2 * t + s1] = 0.5 * g[p, t, q, r]
    return of.InteractionOperator(e0, one, two), 2 * n


def letters(term, nq):
    out = ["I"] * nq
    for q, p in term:
        out[q] = p
    return "".join(out)


def reduced_terms(iop, nmodes, nelec, flip_last):
    qop = of.symmetry_conserving_bravyi_kitaev(of.get_fermion_operator(iop), nmodes, nelec)
    qop.compress(1e-12)
    nq = nmodes - 2
    out = {}
    for term, coeff in qop.terms.items():
        assert abs(coeff.imag) < 1e-12
        s = letters(term, nq)
        w = coeff.real
        if flip_last and s[-1] in "YZ":
            w = -w
        out[s] = out.get(s, 0.0) + w
    return out, nq


def dense(terms, nq):
    pauli = {
        "I": np.eye(2),
        "X": np.array([[0, 1], [1, 0]]),
        "Y": np.array([[0, -1j], [1j, 0]]),
        "Z": np.diag([1, -1]),
    }
    m = np.zeros((2**nq, 2**nq), complex)
    for s, w in terms.items():
        k = np.array([[1]])
        for c in s:
            k = np.kron(k, pauli[c])
        m += w * k
    return m


def h2_row(r):
    mol = gto.M(atom=f"H 0 0 0; H 0 0 {r}", basis="sto-3g", verbose=0)
    mf = scf.RHF(mol).run()
    iop, nm = interaction_operator(mol, mf, [], [0, 1])
    ref = fci.FCI(mf).kernel()[0]
    return reduced_terms(iop, nm, 2, True), ref


def heh_row(r):
    mol = gto.M(atom=f"He 0 0 0; H 0 0 {r}", basis="sto-3g", charge=1, verbose=0)
    mf = scf.RHF(mol).run()
    iop, nm = interaction_operator(mol, mf, [], [0, 1])
    ref = fci.FCI(mf).kernel()[0]
    return reduced_terms(iop, nm, 2, True), ref


def lih_row(r):
    mol = gto.M(atom=f"Li 0 0 0; H 0 0 {r}", basis="sto-3g", symmetry=True, verbose=0)
    mf = scf.RHF(mol).run()
    irreps = pyscf.symm.label_orb_symm(mol, mol.irrep_name, mol.symm_orb, mf.mo_coeff)
    sigma = [i for i, lab in enumerate(irreps) if lab == "A1"]
    core, active = [sigma[0]], sigma[1:4]
    iop, nm = interaction_operator(mol, mf, core, active)
    cas = mcscf.CASCI(mf, 3, 2)
    mo = cas.sort_mo([i + 1 for i in active])
    ref = cas.kernel(mo)[0]
    return reduced_terms(iop, nm, 2, False), ref


def write_table(path, model, template, rows, header_extra):
    with open(path, "w") as f:
        f.write(f"# model: {model}\n")
        f.write(
            f"# oracle: PySCF {pyscf.__version__} RHF/STO-3G integrals; "
            f"OpenFermion {of.__version__} symmetry-conserving Bravyi-Kitaev reduction\n"
        )
        for line in header_extra:
            f.write(f"# {line}\n")
        if model == "LiH":
            f.write("# terms: " + " ".join(template) + "\n")
        f.write("# columns: bond_length[Angstrom] " + " ".join(f"w[{s}]" for s in template)
                + " reference_energy[Ha]\n")
        for r, terms, ref in rows:
            ws = [terms.get(s, 0.0) for s in template]
            f.write(f"{r:.2f} " + " ".join(f"{w:.12e}" for w in ws) + f" {ref:.12f}\n")


def build(out_dir, model, builder, bonds, template, extra):
    rows = []
    for r in bonds:
        (terms, nq), ref = builder(r)
        if template is not None:
            unknown = set(terms) - set(template)
            assert not unknown, (model, r, unknown)
        rows.append((r, terms, ref))
        ground = np.linalg.eigvalsh(dense(terms, nq))[0]
        assert abs(ground - ref) < 1e-8, (model, r, ground, ref)
    if template is None:
        template = sorted(set().union(*[set(t) for _, t, _ in rows]))
        template.remove("I" * len(template[0]))
        template.insert(0, "IIII")
    write_table(out_dir / f"{model.lower().replace('+', 'plus')}_sto3g.txt", model, template, rows, extra)


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else "data")
    out.mkdir(parents=True, exist_ok=True)
    grid = lambda a, b, h: [round(a + i * h, 2) for i in range(int(round((b - a) / h)) + 1)]
    build(out, "H2", h2_row, grid(0.3, 2.5, 0.1), H2_TEMPLATE,
          ["reference: full CI", "qubit 1 relabelled by X so the Hartree-Fock state is |10>"])
    build(out, "HeH+", heh_row, grid(0.5, 3.0, 0.1), HEH_TEMPLATE,
          ["reference: full CI", "qubit 1 relabelled by X so the Hartree-Fock state is |10>"])
    build(out, "LiH", lih_row, grid(0.8, 3.2, 0.2), None,
          ["reference: CASCI(2e, 3 sigma orbitals), frozen Li 1s core"])


if __name__ == "__main__":
    main()
