use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;

use qdp_core::exec::substream;
use qdp_core::state::{basis_encode, decompose};
use qdp_core::{
    compile_circuit, decompose_to_clifford_t, decrypt, encrypt, homomorphic_exec, load_dataset, parse_query,
    PauliKey, Schema,
};

/// Largest payload the demo simulates.
const MAX_PAYLOAD_QUBITS: usize = 6;

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    #[arg(long)]
    query: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print the per-gate key-update transcript.
    #[arg(long)]
    transcript: bool,
}

pub fn run(args: DemoArgs) -> Result<()> {
    let schema = Schema::from_toml_file(&args.schema).with_context(|| format!("schema {}", args.schema.display()))?;
    if schema.payload_width() > MAX_PAYLOAD_QUBITS {
        bail!("payload of {} qubits exceeds the demo limit of {MAX_PAYLOAD_QUBITS}", schema.payload_width());
    }
    let data = load_dataset(&args.dataset, &schema).with_context(|| format!("dataset {}", args.dataset.display()))?;
    let q = parse_query(&args.query, data.schema())?;
    let circuit = compile_circuit(&q, data.schema());
    let lowered = decompose_to_clifford_t(&circuit);

    let mut init = circuit.ancilla_init.clone();
    init.resize(lowered.qubit_count - circuit.data_qubits, false);
    let plain_in = basis_encode(&data)?.extend(&init)?;
    let plain_out = plain_in.apply_circuit(&lowered.gates)?;

    let mut key_rng = substream(args.seed, "qotp/key", 0);
    let mut gadget_rng = substream(args.seed, "qotp/gadget", 0);
    let key = PauliKey::random(lowered.qubit_count, &mut key_rng);
    let cipher = encrypt(&plain_in, &key)?;
    let (cipher_out, final_key, transcript) = homomorphic_exec(&cipher, &key, &lowered.gates, &mut gadget_rng)?;
    let out = decrypt(&cipher_out, &final_key)?;

    let fidelity = out.fidelity(&plain_out);
    let alpha = out.prob_one(circuit.output_qubit);
    println!("query          {}", q.display(data.schema()));
    println!("rows           {}", data.n());
    println!("qubits         {} ({} data, {} ancilla)", lowered.qubit_count, circuit.data_qubits, lowered.qubit_count - circuit.data_qubits);
    println!("gates          {}", lowered.gates.len());
    println!("T-count        {}", lowered.t_count());
    println!("magic states   {}", transcript.magic_uses);
    println!("interactions   {}", transcript.interactions());
    println!("corrections    {}", transcript.corrections());
    println!("fidelity       {fidelity:.12}");
    println!("output P(1)    {alpha:.6}");
    if args.transcript {
        print!("{}", transcript.dump());
    }
    if fidelity < 1.0 - 1e-10 {
        bail!("decrypted state disagrees with the plaintext circuit (fidelity {fidelity:e})");
    }
    let expected = decompose(&data, &q).alpha_f64();
    if (alpha - expected).abs() > 1e-10 {
        bail!("output marginal {alpha} differs from the query fraction {expected}");
    }
    Ok(())
}
