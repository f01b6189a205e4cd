"""Streamlit viewer for bench/compare report files.

    streamlit run dashboard.py
"""

import pandas as pd
import streamlit as st

from treesmooth.errors import ModelSchemaError
from treesmooth.reporting import (
    EXCEL_MIME,
    excel_bytes,
    load_document,
    report_frame,
    summary_frame,
)

st.set_page_config(page_title="treesmooth reports", layout="wide")

st.sidebar.title("Reports")
uploads = st.sidebar.file_uploader(
    "Report JSON files (bench or compare output)",
    type=["json"],
    accept_multiple_files=True,
)

st.title("📊 Benchmark Reports")

if not uploads:
    st.info("Upload one or more report files to begin.")
    st.stop()

frames = []
for upload in uploads:
    try:
        frames.append(report_frame(load_document(upload.getvalue())))
    except ModelSchemaError as e:
        st.error(f"{upload.name}: {e}")

if not frames:
    st.stop()

df = pd.concat(frames, ignore_index=True)
summary = summary_frame(df)

datasets = sorted(df["dataset"].unique())
dataset = st.sidebar.selectbox("Dataset", datasets)
view = summary[summary["dataset"] == dataset]

# ==================== SUMMARY CARDS ====================
st.markdown(f"### {dataset}")
cols = st.columns(max(len(view), 1))
for col, (_, row) in zip(cols, view.iterrows()):
    with col:
        st.metric(
            f"{row['method']} ({row['protocol']}) balanced accuracy",
            f"{row['balanced_accuracy_mean']:.4f}",
            help=f"std {row['balanced_accuracy_std']:.4f}, range {row['balanced_accuracy_min']:.4f} to {row['balanced_accuracy_max']:.4f}",
        )
        st.metric(
            "ROC-AUC",
            f"{row['roc_auc_mean']:.4f}",
            help=f"std {row['roc_auc_std']:.4f}, range {row['roc_auc_min']:.4f} to {row['roc_auc_max']:.4f}",
        )

st.markdown("---")
st.markdown("### 📋 Repetitions")
rows = df[df["dataset"] == dataset]
st.dataframe(
    rows,
    use_container_width=True,
    hide_index=True,
    column_config={
        "rep": st.column_config.NumberColumn("Rep", width="small"),
        "balanced_accuracy": st.column_config.NumberColumn("Balanced accuracy", format="%.4f"),
        "roc_auc": st.column_config.NumberColumn("ROC-AUC", format="%.4f"),
    },
)

st.markdown("### 📈 Summary")
st.dataframe(summary, use_container_width=True, hide_index=True)

# ==================== EXPORT ====================
st.markdown("---")
st.markdown("### 📥 Export Data")
col1, col2 = st.columns(2)
with col1:
    st.download_button(
        label="📄 Download CSV",
        data=df.to_csv(index=False),
        file_name="treesmooth_repetitions.csv",
        mime="text/csv",
    )
with col2:
    st.download_button(
        label="📊 Download Excel",
        data=excel_bytes({"Repetitions": df, "Summary": summary}),
        file_name="treesmooth_report.xlsx",
        mime=EXCEL_MIME,
    )
