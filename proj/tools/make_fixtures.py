#!/usr/bin/env python3
"""Writes the small CIC-style CSV fixtures under data/fixtures/.

Rows are synthetic: each class shifts a random subset of features, each
domain adds its own offset, and a few columns are constant as in the real
flow exports. Run once; the outputs are committed.
"""

import csv
import pathlib

import numpy as np

CIC_IDS2018 = [
    "Dst Port", "Protocol", "Flow Duration", "Tot Fwd Pkts", "Tot Bwd Pkts",
    "TotLen Fwd Pkts", "TotLen Bwd Pkts", "Fwd Pkt Len Max", "Fwd Pkt Len Min",
    "Fwd Pkt Len Mean", "Fwd Pkt Len Std", "Bwd Pkt Len Max", "Bwd Pkt Len Min",
    "Bwd Pkt Len Mean", "Bwd Pkt Len Std", "Flow Byts/s", "Flow Pkts/s",
    "Flow IAT Mean", "Flow IAT Std", "Flow IAT Max", "Flow IAT Min",
    "Fwd IAT Tot", "Fwd IAT Mean", "Fwd IAT Std", "Fwd IAT Max", "Fwd IAT Min",
    "Bwd IAT Tot", "Bwd IAT Mean", "Bwd IAT Std", "Bwd IAT Max", "Bwd IAT Min",
    "Fwd PSH Flags", "Bwd PSH Flags", "Fwd URG Flags", "Bwd URG Flags",
    "Fwd Header Len", "Bwd Header Len", "Fwd Pkts/s", "Bwd Pkts/s",
    "Pkt Len Min", "Pkt Len Max", "Pkt Len Mean", "Pkt Len Std", "Pkt Len Var",
    "FIN Flag Cnt", "SYN Flag Cnt", "RST Flag Cnt", "PSH Flag Cnt",
    "ACK Flag Cnt", "URG Flag Cnt", "CWE Flag Count", "ECE Flag Cnt",
    "Down/Up Ratio", "Pkt Size Avg", "Fwd Seg Size Avg", "Bwd Seg Size Avg",
    "Fwd Byts/b Avg", "Fwd Pkts/b Avg", "Fwd Blk Rate Avg", "Bwd Byts/b Avg",
    "Bwd Pkts/b Avg", "Bwd Blk Rate Avg", "Subflow Fwd Pkts",
    "Subflow Fwd Byts", "Subflow Bwd Pkts", "Subflow Bwd Byts",
    "Init Fwd Win Byts", "Init Bwd Win Byts", "Fwd Act Data Pkts",
    "Fwd Seg Size Min", "Active Mean", "Active Std", "Active Max",
    "Active Min", "Idle Mean", "Idle Std", "Idle Max", "Idle Min",
    "Timestamp Hour",
]

CICIOT2023 = [
    "flow_duration", "Header_Length", "Protocol Type", "Duration", "Rate",
    "Srate", "Drate", "fin_flag_number", "syn_flag_number", "rst_flag_number",
    "psh_flag_number", "ack_flag_number", "ece_flag_number", "cwr_flag_number",
    "ack_count", "syn_count", "fin_count", "urg_count", "rst_count", "HTTP",
    "HTTPS", "DNS", "Telnet", "SMTP", "SSH", "IRC", "TCP", "UDP", "DHCP",
    "ARP", "ICMP", "IPv", "LLC", "Tot sum", "Min", "Max", "AVG", "Std",
    "Tot size", "IAT", "Number", "Magnitue", "Radius",
]

CICIOMT2024 = CICIOT2023 + ["Variance"]

SETS = {
    "cic_ids2018": (CIC_IDS2018, ["Benign", "FTP-BruteForce", "SSH-Bruteforce", "DoS attacks-Hulk"],
                    ["wed_14feb", "thu_15feb", "fri_16feb", "wed_21feb"]),
    "ciciot2023": (CICIOT2023, ["BenignTraffic", "DDoS-ICMP_Flood", "Mirai-udpplain", "Recon-PortScan"],
                   ["lab_a", "lab_b", "lab_c", "lab_d"]),
    "ciciomt2024": (CICIOMT2024, ["Benign", "TCP_IP-DDoS-SYN", "MQTT-DoS-Connect_Flood", "ARP_Spoofing"],
                    ["wifi_mqtt", "bluetooth", "wifi_mqtt_2", "bluetooth_2"]),
}

ROWS_PER_DOMAIN = 240


def write(name, features, classes, domains, rng):
    d = len(features)
    constant = set(rng.choice(d, size=3, replace=False))
    class_shift = rng.normal(0.0, 1.5, size=(len(classes), d))
    class_shift *= rng.random((len(classes), d)) < 0.4
    out = pathlib.Path(__file__).resolve().parent.parent / "data" / "fixtures" / f"{name}.csv"
    with out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(features + ["Label", "Domain"])
        for dom in domains:
            offset = rng.normal(0.0, 0.5, size=d)
            scale = np.exp(rng.normal(0.0, 1.0, size=d))
            for _ in range(ROWS_PER_DOMAIN):
                c = int(rng.integers(len(classes)))
                x = (rng.normal(size=d) + class_shift[c] + offset) * scale
                row = [("0" if j in constant else f"{x[j]:.6g}") for j in range(d)]
                w.writerow(row + [classes[c], dom])
    print(out, d, "features")


def main():
    rng = np.random.default_rng(2018)
    for name, (features, classes, domains) in SETS.items():
        write(name, features, classes, domains, rng)


if __name__ == "__main__":
    main()
